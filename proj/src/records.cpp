#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "proxbundle/bench.hpp"

namespace proxbundle {

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = {
      "problem_id", "n",          "nf",         "nf_xstar",       "nf_z",
      "variant",    "eps_level",  "seed",       "solved",         "iterations",
      "wall_time",  "final_distance", "tilt_corrections", "within_bound"};
  return columns;
}

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : records) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{:.17g},{:.17g},{},{}\n", r.problem_id, r.n, r.nf, r.nf_xstar,
               r.nf_z, to_string(r.variant), to_string(r.eps_level), r.seed, r.solved ? 1 : 0, r.iterations,
               r.wall_time, r.final_distance, r.tilt_corrections, r.within_bound ? 1 : 0);
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

long long parse_int(const std::string& s, const char* column) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw InvalidArgument(std::string("csv: bad integer in column ") + column);
  return v;
}

std::uint64_t parse_u64(const std::string& s, const char* column) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw InvalidArgument(std::string("csv: bad integer in column ") + column);
  return v;
}

double parse_double(const std::string& s, const char* column) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw InvalidArgument(std::string("csv: bad number in column ") + column);
  return v;
}

bool parse_bool(const std::string& s, const char* column) {
  if (s == "1") return true;
  if (s == "0") return false;
  throw InvalidArgument(std::string("csv: bad flag in column ") + column);
}

bool same_double(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

}  // namespace

std::vector<TrialRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split(line) != csv_columns()) throw InvalidArgument("csv: unexpected header");

  std::vector<TrialRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != csv_columns().size())
      throw InvalidArgument("csv: line " + std::to_string(records.size() + 2) + " has the wrong field count");
    TrialRecord r;
    r.problem_id = f[0];
    r.n = static_cast<int>(parse_int(f[1], "n"));
    r.nf = static_cast<int>(parse_int(f[2], "nf"));
    r.nf_xstar = static_cast<int>(parse_int(f[3], "nf_xstar"));
    r.nf_z = static_cast<int>(parse_int(f[4], "nf_z"));
    r.variant = parse_variant(f[5]);
    r.eps_level = parse_eps_level(f[6]);
    r.seed = parse_u64(f[7], "seed");
    r.solved = parse_bool(f[8], "solved");
    r.iterations = static_cast<int>(parse_int(f[9], "iterations"));
    r.wall_time = parse_double(f[10], "wall_time");
    r.final_distance = parse_double(f[11], "final_distance");
    r.tilt_corrections = static_cast<int>(parse_int(f[12], "tilt_corrections"));
    r.within_bound = parse_bool(f[13], "within_bound");
    records.push_back(std::move(r));
  }
  return records;
}

bool same_persisted_fields(const TrialRecord& a, const TrialRecord& b, bool include_wall_time) {
  return a.problem_id == b.problem_id && a.n == b.n && a.nf == b.nf && a.nf_xstar == b.nf_xstar &&
         a.nf_z == b.nf_z && a.variant == b.variant && a.eps_level == b.eps_level && a.seed == b.seed &&
         a.solved == b.solved && a.iterations == b.iterations &&
         (!include_wall_time || same_double(a.wall_time, b.wall_time)) &&
         same_double(a.final_distance, b.final_distance) && a.tilt_corrections == b.tilt_corrections &&
         a.within_bound == b.within_bound;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  require(!records.empty(), "summarize: no records");
  // Sorted by dimension class, then variant in declaration order.
  std::map<std::tuple<std::string, int>, SummaryRow> groups;
  for (const auto& r : records) {
    const std::string cls(dimension_class(r.n));
    auto& row = groups[{cls, static_cast<int>(r.variant)}];
    row.variant = r.variant;
    row.dimension_class = cls;
    ++row.count;
    row.mean_wall_time += r.wall_time;
    row.mean_iterations += r.iterations;
    row.mean_tilt_corrections += r.tilt_corrections;
    row.solved_fraction += r.solved ? 1.0 : 0.0;
    row.within_bound_fraction += r.within_bound ? 1.0 : 0.0;
  }
  std::vector<SummaryRow> rows;
  for (auto& [key, row] : groups) {
    const double c = row.count;
    row.mean_wall_time /= c;
    row.mean_iterations /= c;
    row.mean_tilt_corrections /= c;
    row.solved_fraction /= c;
    row.within_bound_fraction /= c;
    rows.push_back(row);
  }
  return rows;
}

void write_summary_text(std::ostream& out, const std::vector<SummaryRow>& rows) {
  fmt::print(out, "{:<6} {:<14} {:>6} {:>12} {:>12} {:>12} {:>8} {:>8}\n", "class", "variant", "runs", "avg_time_s",
             "avg_iters", "avg_tilts", "solved", "in_bound");
  for (const auto& r : rows)
    fmt::print(out, "{:<6} {:<14} {:>6} {:>12.6f} {:>12.2f} {:>12.4f} {:>8.3f} {:>8.3f}\n", r.dimension_class,
               to_string(r.variant), r.count, r.mean_wall_time, r.mean_iterations, r.mean_tilt_corrections,
               r.solved_fraction, r.within_bound_fraction);
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "dimension_class,variant,runs,mean_wall_time,mean_iterations,mean_tilt_corrections,solved_fraction,"
         "within_bound_fraction\n";
  for (const auto& r : rows)
    fmt::print(out, "{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.dimension_class, to_string(r.variant),
               r.count, r.mean_wall_time, r.mean_iterations, r.mean_tilt_corrections, r.solved_fraction,
               r.within_bound_fraction);
}

}  // namespace proxbundle
