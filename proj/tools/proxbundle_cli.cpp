// Command-line front end: solve one problem, generate a problem grid, run the
// benchmark matrix, and build performance profiles.
//
// Exit codes: 0 success, 1 usage error, 2 solve failure, 3 invariant
// violation during a checked run.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "proxbundle/bench.hpp"
#include "proxbundle/oracles.hpp"
#include "proxbundle/problems.hpp"
#include "proxbundle/solver.hpp"
#include "proxbundle/test_functions.hpp"

namespace pb = proxbundle;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolveFailure = 2;
constexpr int kExitViolation = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join(const pb::Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += fmt::format("{}{:.10g}", i ? " " : "", v[i]);
  return out;
}

struct SolveOptions {
  std::string problem_file;
  std::string function_name;
  double r = 1.0;
  double s_tol = 1e-3;
  double eps = 0.0;
  std::string variant = "full";
  int max_iter = 0;
  std::uint64_t seed = 0;
  std::string oracle;
  double delta = 0.0;
  bool check = false;
  bool trace = false;
};

int cmd_solve(const SolveOptions& o) {
  pb::SolverConfig config;
  config.r = o.r;
  config.s_tol = o.s_tol;
  config.eps = o.eps;
  config.variant = pb::parse_variant(o.variant);
  config.max_iterations = o.max_iter;
  config.check_invariants = o.check;
  config.record_trace = o.trace;

  std::optional<pb::MaxQuadProblem> problem;
  std::unique_ptr<pb::Oracle> oracle;
  if (!o.problem_file.empty()) {
    problem = pb::load_problem(o.problem_file);
    config.z = problem->z;
    const auto kind = pb::parse_oracle_kind(o.oracle.empty() ? "ball" : o.oracle);
    switch (kind) {
      case pb::OracleKind::kExact:
        if (o.eps != 0.0) throw UsageError("--oracle exact requires --eps 0");
        oracle = std::make_unique<pb::MaxQuadExactOracle>(*problem);
        break;
      case pb::OracleKind::kBall:
        oracle = std::make_unique<pb::BallNoiseOracle>(*problem, o.eps, o.seed);
        break;
      case pb::OracleKind::kSimplex:
        oracle = std::make_unique<pb::SimplexGradientOracle>(pb::value_function(*problem), o.eps, o.delta);
        break;
    }
    if (problem->r != o.r)
      fmt::print(std::cerr, "note: problem ground truth was built for r = {}, solving with r = {}\n", problem->r,
                 o.r);
  } else {
    const auto fn = pb::parse_test_function(o.function_name);
    const auto kind = pb::parse_oracle_kind(o.oracle.empty() ? "simplex" : o.oracle);
    if (kind != pb::OracleKind::kSimplex)
      throw UsageError("test functions are value-only; use --oracle simplex");
    config.z = pb::default_start(fn);
    oracle = std::make_unique<pb::SimplexGradientOracle>(pb::value_function(fn), o.eps, o.delta);
  }

  const pb::SolveResult result = pb::run(*oracle, config);

  if (o.trace) {
    fmt::print("{:>6} {:>22} {:>22} {:>14} {:>12} {:>5} {:>6}\n", "k", "model_value", "merit", "gap", "step", "tilt",
               "size");
    for (const auto& rec : result.trace)
      fmt::print("{:>6} {:>22.15g} {:>22.15g} {:>14.6e} {:>12.4e} {:>5} {:>6}\n", rec.k, rec.model_value,
                 rec.merit, rec.gap, rec.step, rec.tilt_corrected ? 1 : 0, rec.bundle_size);
  }
  fmt::print("stop_reason      {}\n", pb::to_string(result.stop_reason));
  fmt::print("iterations       {}\n", result.iterations);
  fmt::print("tilt_corrections {}\n", result.tilt_corrections);
  fmt::print("final_gap        {:.6e}\n", result.final_gap / o.r);
  fmt::print("error_bound      {:.6e}\n", result.error_bound);
  fmt::print("x_out            {}\n", join(result.x_out));
  if (problem) {
    const double dist = (result.x_out - problem->x_star).norm();
    fmt::print("distance_to_xstar {:.6e}\n", dist);
    fmt::print("within_bound     {}\n", dist <= o.s_tol + o.eps / o.r ? "yes" : "no");
  }
  if (!result.violations.empty()) {
    for (const auto& v : result.violations) fmt::print(std::cerr, "violation: {}\n", v);
    return kExitViolation;
  }
  return kExitOk;
}

struct GridOptions {
  std::string grid = "desk";
  std::vector<int> dims;
  int reps = 0;
  std::uint64_t master_seed = pb::GridConfig{}.master_seed;
  bool sparse = false;
};

pb::GridConfig make_grid(const GridOptions& o) {
  pb::GridConfig config;
  if (o.grid == "full")
    config = pb::full_grid();
  else if (o.grid != "desk")
    throw UsageError("--grid must be desk or full");
  if (!o.dims.empty()) config.dimensions = o.dims;
  if (o.reps > 0) config.reps = o.reps;
  config.master_seed = o.master_seed;
  config.sparse = o.sparse;
  return config;
}

int cmd_generate(const GridOptions& g, const std::string& out_dir, int parallel) {
  const auto config = make_grid(g);
  std::filesystem::create_directories(out_dir);
  const auto problems = pb::generate_grid_problems(config, parallel);
  for (const auto& gp : problems) pb::save_problem(gp.problem, std::filesystem::path(out_dir) / (gp.id + ".json"));
  fmt::print("wrote {} problems to {}\n", problems.size(), out_dir);
  return kExitOk;
}

int cmd_bench(const GridOptions& g, const std::string& oracle, int parallel, const std::string& out,
              const std::string& summary_csv, bool check) {
  auto config = make_grid(g);
  config.oracle = pb::parse_oracle_kind(oracle);
  config.check_invariants = check;
  if (config.oracle == pb::OracleKind::kExact) config.eps_levels = {pb::EpsLevel::kZero};

  const auto records = pb::run_trials(config, parallel);
  {
    std::ofstream f(out);
    if (!f) throw UsageError("cannot write " + out);
    pb::write_csv(f, records);
  }
  const auto rows = pb::summarize(records);
  pb::write_summary_text(std::cout, rows);
  if (!summary_csv.empty()) {
    std::ofstream f(summary_csv);
    if (!f) throw UsageError("cannot write " + summary_csv);
    pb::write_summary_csv(f, rows);
  }

  int failed = 0;
  int violations = 0;
  for (const auto& r : records) {
    if (!r.diagnostic.empty()) {
      ++failed;
      fmt::print(std::cerr, "trial {} / {} / {}: {}\n", r.problem_id, pb::to_string(r.variant),
                 pb::to_string(r.eps_level), r.diagnostic);
    }
    for (const auto& v : r.violations) {
      ++violations;
      fmt::print(std::cerr, "violation in {} / {}: {}\n", r.problem_id, pb::to_string(r.variant), v);
    }
  }
  fmt::print("{} trials written to {} ({} failed with a diagnostic)\n", records.size(), out, failed);
  return violations > 0 ? kExitViolation : kExitOk;
}

int cmd_profile(const std::string& metric, const std::string& in, const std::string& out) {
  std::ifstream f(in);
  if (!f) throw UsageError("cannot read " + in);
  const auto records = pb::read_csv(f);
  const auto table = pb::performance_profile(records, pb::parse_profile_metric(metric));
  std::ofstream o(out);
  if (!o) throw UsageError("cannot write " + out);
  pb::write_profile_tsv(o, table);
  for (std::size_t s = 0; s < table.solvers.size(); ++s)
    fmt::print("{:<14} rho(1) = {:.3f}  solved = {:.3f}\n", table.solvers[s], table.rho[s].front(),
               table.solved_fraction[s]);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximal points of convex functions from inexact subgradients"};
  app.require_subcommand(1);

  SolveOptions so;
  auto* solve = app.add_subcommand("solve", "Compute one proximal point");
  auto* src_problem = solve->add_option("--problem", so.problem_file, "Max-of-quadratics problem file (JSON)");
  auto* src_function = solve->add_option("--function", so.function_name,
                                         "Named test function (palpha, dem, wong3, cb2, mifflin2, evd52, oet6, "
                                         "maxexp, maxlog, max10)");
  src_problem->excludes(src_function);
  solve->add_option("--r", so.r, "Prox-parameter")->capture_default_str();
  solve->add_option("--stol", so.s_tol, "Stopping tolerance")->capture_default_str();
  solve->add_option("--eps", so.eps, "Oracle error level")->capture_default_str();
  solve->add_option("--variant", so.variant, "three, full, active or almost_active")->capture_default_str();
  solve->add_option("--max-iter", so.max_iter, "Iteration cap (default 100 n)");
  solve->add_option("--seed", so.seed, "Noise seed for the ball oracle")->capture_default_str();
  solve->add_option("--oracle", so.oracle, "exact, ball or simplex (default: ball for problems, simplex for functions)");
  solve->add_option("--delta", so.delta, "Simplex-gradient step (default 1e-5 (1 + |x|))");
  solve->add_flag("--check", so.check, "Check the convergence invariants at every iteration");
  solve->add_flag("--trace", so.trace, "Print the iteration trace");

  GridOptions go;
  int parallel = 1;
  auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--grid", go.grid, "desk (n in {4,10}, 1 per state) or full (n in {4,10,25}, 10 per state)")
        ->capture_default_str();
    sub->add_option("--dims", go.dims, "Override the dimensions");
    sub->add_option("--reps", go.reps, "Problems per state");
    sub->add_option("--master-seed", go.master_seed, "Master seed")->capture_default_str();
    sub->add_flag("--sparse", go.sparse, "95% sparse Hessian factors");
    sub->add_option("--parallel", parallel, "Worker threads")->capture_default_str();
  };

  std::string out_dir;
  auto* generate = app.add_subcommand("generate", "Write the problem grid as JSON files");
  add_grid(generate);
  generate->add_option("--out", out_dir, "Output directory")->required();

  std::string bench_out = "results.csv";
  std::string bench_oracle = "ball";
  std::string summary_csv;
  bool bench_check = false;
  auto* bench = app.add_subcommand("bench", "Run the trial matrix and write results.csv");
  add_grid(bench);
  bench->add_option("--out", bench_out, "Results CSV")->capture_default_str();
  bench->add_option("--oracle", bench_oracle, "ball, simplex or exact")->capture_default_str();
  bench->add_option("--summary-csv", summary_csv, "Also write the averages table as CSV");
  bench->add_flag("--check", bench_check, "Check the convergence invariants in every trial");

  std::string metric = "iters";
  std::string profile_in = "results.csv";
  std::string profile_out = "profile.tsv";
  auto* profile = app.add_subcommand("profile", "Performance profile from results.csv");
  profile->add_option("--metric", metric, "time or iters")->capture_default_str();
  profile->add_option("--in", profile_in, "Results CSV")->capture_default_str();
  profile->add_option("--out", profile_out, "Profile TSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (parallel < 1) throw UsageError("--parallel must be >= 1");
    if (solve->parsed()) {
      if (so.problem_file.empty() == so.function_name.empty())
        throw UsageError("solve needs exactly one of --problem or --function");
      return cmd_solve(so);
    }
    if (generate->parsed()) return cmd_generate(go, out_dir, parallel);
    if (bench->parsed()) return cmd_bench(go, bench_oracle, parallel, bench_out, summary_csv, bench_check);
    if (profile->parsed()) return cmd_profile(metric, profile_in, profile_out);
  } catch (const UsageError& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const pb::InvalidArgument& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const pb::SolveFailure& e) {
    fmt::print(std::cerr, "solve failure: {}\n", e.what());
    fmt::print(std::cerr, "the bundle QP is badly scaled; a larger --r keeps early steps short\n");
    return kExitSolveFailure;
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "solve failure: {}\n", e.what());
    return kExitSolveFailure;
  }
  return kExitUsage;
}
