#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <string>

#include "proxbundle/bench.hpp"
#include "proxbundle/oracles.hpp"
#include "proxbundle/solver.hpp"

namespace proxbundle {

std::string_view to_string(EpsLevel level) {
  switch (level) {
    case EpsLevel::kZero: return "0";
    case EpsLevel::kStol: return "stol";
    case EpsLevel::kTenStol: return "10stol";
  }
  return "?";
}

EpsLevel parse_eps_level(std::string_view s) {
  for (EpsLevel level : kAllEpsLevels)
    if (to_string(level) == s) return level;
  throw InvalidArgument("unknown eps level '" + std::string(s) + "' (expected 0, stol or 10stol)");
}

double eps_value(EpsLevel level, double s_tol) {
  switch (level) {
    case EpsLevel::kZero: return 0.0;
    case EpsLevel::kStol: return s_tol;
    case EpsLevel::kTenStol: return 10.0 * s_tol;
  }
  return 0.0;
}

std::string_view to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::kExact: return "exact";
    case OracleKind::kBall: return "ball";
    case OracleKind::kSimplex: return "simplex";
  }
  return "?";
}

OracleKind parse_oracle_kind(std::string_view s) {
  for (OracleKind kind : {OracleKind::kExact, OracleKind::kBall, OracleKind::kSimplex})
    if (to_string(kind) == s) return kind;
  throw InvalidArgument("unknown oracle '" + std::string(s) + "' (expected exact, ball or simplex)");
}

GridConfig full_grid() {
  GridConfig config;
  config.dimensions = {4, 10, 25};
  config.reps = 10;
  return config;
}

int iteration_cap(int n) { return n <= 10 ? 100 * n : 20 * n; }

std::string_view dimension_class(int n) { return n <= 10 ? "low" : "high"; }

std::vector<int> activity_levels(int n) {
  require(n >= 1, "activity_levels: n must be >= 1");
  std::vector<int> levels{1, (n + 2) / 3, (2 * n + 2) / 3, n};
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

std::vector<TrialState> grid_states(const GridConfig& config) {
  std::vector<TrialState> states;
  for (int n : config.dimensions) {
    const auto levels = activity_levels(n);
    for (int nf : levels)
      for (int nx : levels)
        for (int nz : levels)
          if (nx <= nf && nz <= nf) states.push_back({n, nf, nx, nz});
  }
  return states;
}

std::uint64_t problem_seed(std::uint64_t master_seed, const TrialState& s, int rep) {
  return Rng::derive(master_seed, {static_cast<std::uint64_t>(s.n), static_cast<std::uint64_t>(s.nf),
                                   static_cast<std::uint64_t>(s.nf_xstar), static_cast<std::uint64_t>(s.nf_z),
                                   static_cast<std::uint64_t>(rep)});
}

std::string problem_id(const TrialState& s, int rep) {
  return "n" + std::to_string(s.n) + "_nf" + std::to_string(s.nf) + "_x" + std::to_string(s.nf_xstar) + "_z" +
         std::to_string(s.nf_z) + "_r" + std::to_string(rep);
}

std::vector<GridProblem> generate_grid_problems(const GridConfig& config, int parallelism) {
  require(config.reps >= 1, "grid: reps must be >= 1");
  require(parallelism >= 1, "grid: parallelism must be >= 1");
  const auto states = grid_states(config);
  std::vector<GridProblem> problems(states.size() * static_cast<std::size_t>(config.reps));
  for (std::size_t i = 0; i < states.size(); ++i)
    for (int rep = 0; rep < config.reps; ++rep) {
      auto& gp = problems[i * static_cast<std::size_t>(config.reps) + static_cast<std::size_t>(rep)];
      gp.id = problem_id(states[i], rep);
      gp.state = states[i];
      gp.rep = rep;
    }

  const auto count = static_cast<long>(problems.size());
  std::vector<std::string> errors(problems.size());
#pragma omp parallel for schedule(dynamic) num_threads(parallelism)
  for (long i = 0; i < count; ++i) {
    auto& gp = problems[static_cast<std::size_t>(i)];
    try {
      GeneratorParams params{gp.state.n, gp.state.nf, gp.state.nf_xstar, gp.state.nf_z,
                             config.r,   problem_seed(config.master_seed, gp.state, gp.rep), config.sparse};
      gp.problem = generate_max_quad(params);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = gp.id + ": " + e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw SolveFailure("problem generation failed for " + e);
  return problems;
}

TrialRecord run_trial(const GridProblem& gp, const TrialSpec& spec) {
  const MaxQuadProblem& p = gp.problem;
  TrialRecord rec;
  rec.problem_id = gp.id;
  rec.n = gp.state.n;
  rec.nf = gp.state.nf;
  rec.nf_xstar = gp.state.nf_xstar;
  rec.nf_z = gp.state.nf_z;
  rec.variant = spec.variant;
  rec.eps_level = spec.eps_level;
  rec.seed = p.seed;

  const double eps = eps_value(spec.eps_level, spec.s_tol);
  try {
    std::unique_ptr<Oracle> oracle;
    switch (spec.oracle) {
      case OracleKind::kExact:
        oracle = std::make_unique<MaxQuadExactOracle>(p);
        break;
      case OracleKind::kBall: {
        const auto noise_seed = Rng::derive(
            p.seed, {static_cast<std::uint64_t>(spec.variant), static_cast<std::uint64_t>(spec.eps_level)});
        oracle = std::make_unique<BallNoiseOracle>(p, eps, noise_seed);
        break;
      }
      case OracleKind::kSimplex:
        oracle = std::make_unique<SimplexGradientOracle>(value_function(p), eps);
        break;
    }

    SolverConfig config;
    config.z = p.z;
    config.r = spec.r;
    config.s_tol = spec.s_tol;
    config.variant = spec.variant;
    config.max_iterations = spec.max_iterations > 0 ? spec.max_iterations : iteration_cap(p.dimension());
    config.record_trace = false;
    config.eps = eps;
    config.check_invariants = spec.check_invariants;

    const auto start = std::chrono::steady_clock::now();
    SolveResult result = run(*oracle, config);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    rec.solved = result.stop_reason == StopReason::kToleranceMet;
    rec.iterations = result.iterations;
    rec.final_distance = (result.x_out - p.x_star).norm();
    rec.tilt_corrections = result.tilt_corrections;
    rec.within_bound = rec.final_distance <= spec.s_tol + eps / spec.r;
    rec.violations = std::move(result.violations);
  } catch (const std::exception& e) {
    rec.solved = false;
    rec.final_distance = std::numeric_limits<double>::quiet_NaN();
    rec.within_bound = false;
    rec.diagnostic = e.what();
  }
  return rec;
}

namespace {

struct TrialIndex {
  std::size_t problem;
  BundleVariant variant;
  EpsLevel eps;
};

std::vector<TrialIndex> enumerate(const std::vector<GridProblem>& problems, const GridConfig& config) {
  std::vector<TrialIndex> out;
  for (std::size_t p = 0; p < problems.size(); ++p)
    for (BundleVariant v : config.variants)
      for (EpsLevel e : config.eps_levels) out.push_back({p, v, e});
  return out;
}

TrialSpec spec_for(const GridConfig& config, const TrialIndex& t) {
  TrialSpec spec;
  spec.variant = t.variant;
  spec.eps_level = t.eps;
  spec.oracle = config.oracle;
  spec.r = config.r;
  spec.s_tol = config.s_tol;
  spec.check_invariants = config.check_invariants;
  return spec;
}

}  // namespace

std::vector<TrialRecord> run_trials(const std::vector<GridProblem>& problems, const GridConfig& config,
                                    int parallelism) {
  require(parallelism >= 1, "run_trials: parallelism must be >= 1");
  const auto trials = enumerate(problems, config);
  std::vector<TrialRecord> records(trials.size());
  const auto count = static_cast<long>(trials.size());
#pragma omp parallel for schedule(dynamic) num_threads(parallelism)
  for (long i = 0; i < count; ++i) {
    const auto& t = trials[static_cast<std::size_t>(i)];
    records[static_cast<std::size_t>(i)] = run_trial(problems[t.problem], spec_for(config, t));
  }
  return records;
}

std::vector<TrialRecord> run_trials(const GridConfig& config, int parallelism) {
  return run_trials(generate_grid_problems(config, parallelism), config, parallelism);
}

std::vector<TrialRecord> run_trials_serial(const std::vector<GridProblem>& problems, const GridConfig& config) {
  const auto trials = enumerate(problems, config);
  std::vector<TrialRecord> records;
  records.reserve(trials.size());
  for (const auto& t : trials) records.push_back(run_trial(problems[t.problem], spec_for(config, t)));
  return records;
}

}  // namespace proxbundle
