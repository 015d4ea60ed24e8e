#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <utility>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "proxbundle/bench.hpp"

namespace proxbundle {

ProfileMetric parse_profile_metric(std::string_view s) {
  if (s == "time") return ProfileMetric::kTime;
  if (s == "iters" || s == "iterations") return ProfileMetric::kIterations;
  throw InvalidArgument("unknown metric '" + std::string(s) + "' (expected time or iters)");
}

ProfileTable performance_profile(const std::vector<std::vector<double>>& costs,
                                 const std::vector<std::string>& solvers, int log_points) {
  require(!solvers.empty(), "performance_profile: no solvers");
  require(!costs.empty(), "performance_profile: no problems");
  require(log_points >= 2, "performance_profile: need at least two grid points");
  const std::size_t ns = solvers.size();
  for (const auto& row : costs) {
    require(row.size() == ns, "performance_profile: cost row has the wrong width");
    for (double c : row) require(c == kUnsolved || (std::isfinite(c) && c > 0.0), "performance_profile: costs must be positive");
  }

  // ratios[p][s]
  std::vector<std::vector<double>> ratios(costs.size(), std::vector<double>(ns, kUnsolved));
  std::vector<double> finite;
  for (std::size_t p = 0; p < costs.size(); ++p) {
    const double best = *std::min_element(costs[p].begin(), costs[p].end());
    if (best == kUnsolved) continue;
    for (std::size_t s = 0; s < ns; ++s)
      if (costs[p][s] != kUnsolved) {
        ratios[p][s] = costs[p][s] / best;
        finite.push_back(ratios[p][s]);
      }
  }

  ProfileTable table;
  table.solvers = solvers;
  const double tau_max = finite.empty() ? 1.0 : std::max(1.0, *std::max_element(finite.begin(), finite.end()));
  for (int i = 0; i < log_points; ++i)
    table.tau.push_back(std::exp(std::log(tau_max) * i / (log_points - 1)));
  table.tau.front() = 1.0;
  table.tau.back() = tau_max;
  table.tau.insert(table.tau.end(), finite.begin(), finite.end());
  std::sort(table.tau.begin(), table.tau.end());
  table.tau.erase(std::unique(table.tau.begin(), table.tau.end()), table.tau.end());

  const double np = static_cast<double>(costs.size());
  table.rho.assign(ns, std::vector<double>(table.tau.size(), 0.0));
  table.solved_fraction.assign(ns, 0.0);
  for (std::size_t s = 0; s < ns; ++s) {
    std::vector<double> col;
    for (const auto& row : ratios) col.push_back(row[s]);
    std::sort(col.begin(), col.end());
    for (std::size_t t = 0; t < table.tau.size(); ++t) {
      const auto count = std::upper_bound(col.begin(), col.end(), table.tau[t]) - col.begin();
      table.rho[s][t] = static_cast<double>(count) / np;
    }
    table.solved_fraction[s] =
        static_cast<double>(std::count_if(col.begin(), col.end(), [](double v) { return v != kUnsolved; })) / np;
  }
  return table;
}

ProfileTable performance_profile(const std::vector<TrialRecord>& records, ProfileMetric metric, int log_points) {
  require(!records.empty(), "performance_profile: no records");
  std::map<BundleVariant, std::size_t> solver_index;
  for (const auto& r : records) solver_index.emplace(r.variant, 0);
  std::vector<std::string> solvers;
  for (auto& [variant, index] : solver_index) {
    index = solvers.size();
    solvers.emplace_back(to_string(variant));
  }

  std::map<std::pair<std::string, EpsLevel>, std::vector<double>> problems;
  for (const auto& r : records) {
    auto& row = problems.try_emplace({r.problem_id, r.eps_level}, solvers.size(), std::nan("")).first->second;
    double& slot = row[solver_index.at(r.variant)];
    if (!std::isnan(slot))
      throw InvalidArgument("performance_profile: duplicate record for " + r.problem_id + " / " +
                            std::string(to_string(r.variant)));
    if (!r.solved)
      slot = kUnsolved;
    else
      slot = metric == ProfileMetric::kTime ? std::max(r.wall_time, kMinTime) : std::max(r.iterations, 1);
  }

  std::vector<std::vector<double>> costs;
  for (auto& [key, row] : problems) {
    // A solver with no record for this problem counts as not having solved it.
    for (double& c : row)
      if (std::isnan(c)) c = kUnsolved;
    costs.push_back(std::move(row));
  }
  return performance_profile(costs, solvers, log_points);
}

void write_profile_tsv(std::ostream& out, const ProfileTable& table) {
  out << "tau";
  for (const auto& s : table.solvers) out << '\t' << s;
  out << '\n';
  for (std::size_t t = 0; t < table.tau.size(); ++t) {
    fmt::print(out, "{:.17g}", table.tau[t]);
    for (std::size_t s = 0; s < table.solvers.size(); ++s) fmt::print(out, "\t{:.17g}", table.rho[s][t]);
    out << '\n';
  }
}

}  // namespace proxbundle
