#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "proxbundle/problems.hpp"
#include "proxbundle/types.hpp"

namespace proxbundle {

// ---------------------------------------------------------------- trials

enum class EpsLevel { kZero, kStol, kTenStol };
inline constexpr EpsLevel kAllEpsLevels[] = {EpsLevel::kZero, EpsLevel::kStol, EpsLevel::kTenStol};
std::string_view to_string(EpsLevel level);
EpsLevel parse_eps_level(std::string_view s);
double eps_value(EpsLevel level, double s_tol);

enum class OracleKind { kExact, kBall, kSimplex };
std::string_view to_string(OracleKind kind);
OracleKind parse_oracle_kind(std::string_view s);

struct TrialState {
  int n = 4;
  int nf = 1;
  int nf_xstar = 1;
  int nf_z = 1;
};

struct GridConfig {
  std::vector<int> dimensions{4, 10};
  int reps = 1;
  std::uint64_t master_seed = 20170101;
  double r = 1.0;
  double s_tol = 1e-3;
  std::vector<BundleVariant> variants{std::begin(kAllVariants), std::end(kAllVariants)};
  std::vector<EpsLevel> eps_levels{std::begin(kAllEpsLevels), std::end(kAllEpsLevels)};
  OracleKind oracle = OracleKind::kBall;
  bool sparse = false;
  bool check_invariants = false;
};

/// The large grid: n in {4, 10, 25}, ten problems per state.
GridConfig full_grid();

/// Iteration cap: 100 n up to n = 10, 20 n above.
int iteration_cap(int n);
std::string_view dimension_class(int n);

/// {1, ceil(n/3), ceil(2n/3), n}, duplicates removed.
std::vector<int> activity_levels(int n);
/// Every (n, nf, nf_xstar, nf_z) with nf_xstar, nf_z <= nf, in canonical order.
std::vector<TrialState> grid_states(const GridConfig& config);

struct GridProblem {
  std::string id;
  TrialState state;
  int rep = 0;
  MaxQuadProblem problem;
};

/// Problem seeds come from the master seed and (n, nf, nf_xstar, nf_z, rep).
std::uint64_t problem_seed(std::uint64_t master_seed, const TrialState& state, int rep);
std::string problem_id(const TrialState& state, int rep);
std::vector<GridProblem> generate_grid_problems(const GridConfig& config, int parallelism = 1);

struct TrialSpec {
  BundleVariant variant = BundleVariant::kFull;
  EpsLevel eps_level = EpsLevel::kZero;
  OracleKind oracle = OracleKind::kBall;
  double r = 1.0;
  double s_tol = 1e-3;
  int max_iterations = 0;  // <= 0 selects iteration_cap(n)
  bool check_invariants = false;
};

struct TrialRecord {
  std::string problem_id;
  int n = 0;
  int nf = 0;
  int nf_xstar = 0;
  int nf_z = 0;
  BundleVariant variant = BundleVariant::kFull;
  EpsLevel eps_level = EpsLevel::kZero;
  std::uint64_t seed = 0;
  bool solved = false;
  int iterations = 0;
  double wall_time = 0.0;
  double final_distance = 0.0;
  int tilt_corrections = 0;
  bool within_bound = false;

  // Not persisted.
  std::vector<std::string> violations;
  std::string diagnostic;
};

/// Runs one solve on a generated problem. Exceptions are caught and recorded
/// as an unsolved trial with a diagnostic.
TrialRecord run_trial(const GridProblem& problem, const TrialSpec& spec);

/// One record per (problem, variant, eps level), ordered by problem, then
/// variant, then eps level. OpenMP-parallel over trials.
std::vector<TrialRecord> run_trials(const GridConfig& config, int parallelism);
std::vector<TrialRecord> run_trials(const std::vector<GridProblem>& problems, const GridConfig& config,
                                    int parallelism);
/// Serial reference; identical output apart from wall_time.
std::vector<TrialRecord> run_trials_serial(const std::vector<GridProblem>& problems, const GridConfig& config);

// ---------------------------------------------------------------- records

const std::vector<std::string>& csv_columns();
void write_csv(std::ostream& out, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_csv(std::istream& in);
/// Field-wise equality of the persisted columns.
bool same_persisted_fields(const TrialRecord& a, const TrialRecord& b, bool include_wall_time = true);

struct SummaryRow {
  BundleVariant variant = BundleVariant::kFull;
  std::string dimension_class;
  int count = 0;
  double mean_wall_time = 0.0;
  double mean_iterations = 0.0;
  double mean_tilt_corrections = 0.0;
  double solved_fraction = 0.0;
  double within_bound_fraction = 0.0;
};

/// Per-variant means split by dimension class.
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);
void write_summary_text(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

// ---------------------------------------------------------------- profiles

enum class ProfileMetric { kTime, kIterations };
ProfileMetric parse_profile_metric(std::string_view s);

inline constexpr double kUnsolved = std::numeric_limits<double>::infinity();
inline constexpr double kMinTime = 1e-9;

struct ProfileTable {
  std::vector<std::string> solvers;
  std::vector<double> tau;               // ascending, tau[0] = 1
  std::vector<std::vector<double>> rho;  // rho[s][t]
  std::vector<double> solved_fraction;   // rho_s at infinity
};

/// costs[p][s]: cost of solver s on problem p, kUnsolved if it failed.
ProfileTable performance_profile(const std::vector<std::vector<double>>& costs,
                                 const std::vector<std::string>& solvers, int log_points = 41);

/// Problems are keyed by (problem_id, eps_level), solvers by variant.
ProfileTable performance_profile(const std::vector<TrialRecord>& records, ProfileMetric metric,
                                 int log_points = 41);

void write_profile_tsv(std::ostream& out, const ProfileTable& table);

}  // namespace proxbundle
