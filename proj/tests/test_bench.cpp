#include <doctest.h>

#include <cmath>
#include <sstream>

#include "proxbundle/bench.hpp"
#include "proxbundle/rng.hpp"

using namespace proxbundle;

namespace {

GridConfig tiny_grid() {
  GridConfig g;
  g.dimensions = {4};
  g.reps = 1;
  g.master_seed = 4242;
  return g;
}

TrialRecord random_record(Rng& rng) {
  TrialRecord r;
  r.problem_id = "n4_nf" + std::to_string(rng.below(5)) + "_x1_z1_r" + std::to_string(rng.below(3));
  r.n = static_cast<int>(1 + rng.below(30));
  r.nf = static_cast<int>(1 + rng.below(30));
  r.nf_xstar = static_cast<int>(1 + rng.below(30));
  r.nf_z = static_cast<int>(1 + rng.below(30));
  r.variant = kAllVariants[rng.below(4)];
  r.eps_level = kAllEpsLevels[rng.below(3)];
  r.seed = rng.next_u64();
  r.solved = rng.below(2) == 1;
  r.iterations = static_cast<int>(rng.below(1000));
  r.wall_time = rng.uniform() * 1e-2;
  r.final_distance = rng.below(10) == 0 ? std::nan("") : std::exp(rng.uniform(-30, 3));
  r.tilt_corrections = static_cast<int>(rng.below(20));
  r.within_bound = rng.below(2) == 1;
  return r;
}

// Checks every structural promise of a profile table.
void check_profile(const ProfileTable& t, std::size_t solvers) {
  REQUIRE(t.solvers.size() == solvers);
  REQUIRE(!t.tau.empty());
  CHECK(t.tau.front() == 1.0);
  for (std::size_t i = 1; i < t.tau.size(); ++i) CHECK(t.tau[i] > t.tau[i - 1]);
  for (std::size_t s = 0; s < solvers; ++s) {
    REQUIRE(t.rho[s].size() == t.tau.size());
    for (std::size_t i = 0; i < t.tau.size(); ++i) {
      CHECK(t.rho[s][i] >= 0.0);
      CHECK(t.rho[s][i] <= 1.0);
      if (i > 0) CHECK(t.rho[s][i] >= t.rho[s][i - 1]);
    }
    CHECK(t.rho[s].back() == doctest::Approx(t.solved_fraction[s]));
  }
}

}  // namespace

TEST_CASE("activity levels and grid states") {
  CHECK(activity_levels(4) == std::vector<int>{1, 2, 3, 4});
  CHECK(activity_levels(10) == std::vector<int>{1, 4, 7, 10});
  CHECK(activity_levels(25) == std::vector<int>{1, 9, 17, 25});
  CHECK(activity_levels(1) == std::vector<int>{1});
  CHECK(grid_states(tiny_grid()).size() == 30);
  CHECK(iteration_cap(4) == 400);
  CHECK(iteration_cap(25) == 500);
}

TEST_CASE("one state, one repetition gives twelve records") {
  GridConfig g = tiny_grid();
  g.dimensions = {1};
  const auto records = run_trials(g, 1);
  CHECK(records.size() == 12);
  for (const auto& r : records) {
    CHECK(r.diagnostic.empty());
    CHECK(r.final_distance >= 0.0);
    if (r.solved) CHECK(r.iterations <= iteration_cap(r.n));
    if (r.eps_level == EpsLevel::kZero && r.solved) CHECK(r.within_bound);
  }
}

TEST_CASE("trial results do not depend on the thread count") {
  const GridConfig g = tiny_grid();
  const auto problems = generate_grid_problems(g, 1);
  const auto serial = run_trials_serial(problems, g);
  const auto parallel = run_trials(problems, g, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(same_persisted_fields(serial[i], parallel[i], false));

  // The problems themselves do not depend on the generation thread count.
  const auto again = generate_grid_problems(g, 3);
  for (std::size_t i = 0; i < problems.size(); ++i) CHECK(to_json(problems[i].problem) == to_json(again[i].problem));

  // CSV text with wall_time blanked is identical.
  auto blank = [](std::vector<TrialRecord> rs) {
    for (auto& r : rs) r.wall_time = 0.0;
    std::ostringstream os;
    write_csv(os, rs);
    return os.str();
  };
  CHECK(blank(serial) == blank(parallel));
}

TEST_CASE("trial failures are recorded, not thrown") {
  GridProblem gp;
  gp.id = "broken";
  gp.state = {2, 1, 1, 1};
  gp.problem = generate_max_quad({2, 1, 1, 1, 1.0, 1, false});
  gp.problem.quadratics[0].b[0] = NAN;
  TrialSpec spec;
  const TrialRecord r = run_trial(gp, spec);
  CHECK_FALSE(r.solved);
  CHECK_FALSE(r.diagnostic.empty());
}

TEST_CASE("CSV round-trip") {
  Rng rng(8);
  std::vector<TrialRecord> records;
  for (int i = 0; i < 200; ++i) records.push_back(random_record(rng));
  std::stringstream ss;
  write_csv(ss, records);
  const auto parsed = read_csv(ss);
  REQUIRE(parsed.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) CHECK(same_persisted_fields(parsed[i], records[i]));

  std::stringstream header_only;
  header_only << "problem_id,n\n";
  CHECK_THROWS_AS(read_csv(header_only), InvalidArgument);
  std::stringstream bad_row;
  write_csv(bad_row, {});
  bad_row << "x,1,2\n";
  CHECK_THROWS_AS(read_csv(bad_row), InvalidArgument);
}

TEST_CASE("CSV header lists the record fields in order") {
  std::ostringstream os;
  write_csv(os, {});
  CHECK(os.str() ==
        "problem_id,n,nf,nf_xstar,nf_z,variant,eps_level,seed,solved,iterations,wall_time,final_distance,"
        "tilt_corrections,within_bound\n");
}

TEST_CASE("summarize") {
  Rng rng(12);
  TrialRecord one = random_record(rng);
  one.n = 4;
  const auto rows = summarize({one});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].count == 1);
  CHECK(rows[0].mean_iterations == one.iterations);
  CHECK(rows[0].mean_wall_time == one.wall_time);
  CHECK(rows[0].mean_tilt_corrections == one.tilt_corrections);
  CHECK(rows[0].dimension_class == "low");
  CHECK_THROWS_AS(summarize({}), InvalidArgument);

  std::vector<TrialRecord> mixed;
  for (int i = 0; i < 40; ++i) {
    TrialRecord r = random_record(rng);
    r.n = i % 2 ? 4 : 25;
    mixed.push_back(r);
  }
  const auto split = summarize(mixed);
  int total = 0;
  for (const auto& row : split) total += row.count;
  CHECK(total == 40);
  std::ostringstream text, csv;
  write_summary_text(text, split);
  write_summary_csv(csv, split);
  CHECK(text.str().find("avg_iters") != std::string::npos);
  CHECK(csv.str().rfind("dimension_class,variant", 0) == 0);
}

TEST_CASE("exact-oracle trials never tilt") {
  GridConfig g = tiny_grid();
  g.eps_levels = {EpsLevel::kZero};
  const auto records = run_trials(g, 1);
  const auto rows = summarize(records);
  for (const auto& row : rows) CHECK(row.mean_tilt_corrections == 0.0);
}

TEST_CASE("profile examples") {
  SUBCASE("single solver, all solved") {
    const auto t = performance_profile({{3.0}, {5.0}, {1.0}}, {"a"});
    check_profile(t, 1);
    for (double v : t.rho[0]) CHECK(v == 1.0);
  }
  SUBCASE("a solver twice as slow jumps at tau = 2") {
    const auto t = performance_profile({{1.0, 2.0}, {3.0, 6.0}, {0.5, 1.0}}, {"fast", "slow"});
    check_profile(t, 2);
    for (std::size_t i = 0; i < t.tau.size(); ++i) {
      CHECK(t.rho[0][i] == 1.0);
      CHECK(t.rho[1][i] == (t.tau[i] >= 2.0 ? 1.0 : 0.0));
    }
  }
  SUBCASE("sixty percent solved") {
    std::vector<std::vector<double>> costs;
    for (int p = 0; p < 10; ++p) costs.push_back({1.0, p < 6 ? 1.0 : kUnsolved});
    const auto t = performance_profile(costs, {"ref", "partial"});
    check_profile(t, 2);
    CHECK(t.rho[1].back() == doctest::Approx(0.6));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(performance_profile(std::vector<std::vector<double>>{}, {"a"}), InvalidArgument);
    CHECK_THROWS_AS(performance_profile(std::vector<std::vector<double>>{{1.0}}, std::vector<std::string>{}), InvalidArgument);
    CHECK_THROWS_AS(performance_profile(std::vector<std::vector<double>>{{-1.0}}, {"a"}), InvalidArgument);
    CHECK_THROWS_AS(performance_profile(std::vector<TrialRecord>{}, ProfileMetric::kIterations), InvalidArgument);
  }
}

TEST_CASE("profile invariants on random cost tables") {
  Rng rng(2718);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t solvers = 1 + rng.below(5);
    const std::size_t problems = 1 + rng.below(30);
    std::vector<std::vector<double>> costs(problems, std::vector<double>(solvers));
    for (auto& row : costs)
      for (double& c : row) c = rng.below(4) == 0 ? kUnsolved : std::exp(rng.uniform(-5, 5));
    std::vector<std::string> names;
    for (std::size_t s = 0; s < solvers; ++s) names.push_back("s" + std::to_string(s));
    const auto t = performance_profile(costs, names);
    check_profile(t, solvers);
    // At tau = 1 exactly the per-problem winners are counted.
    for (std::size_t s = 0; s < solvers; ++s) {
      int wins = 0;
      for (const auto& row : costs)
        if (row[s] != kUnsolved && row[s] == *std::min_element(row.begin(), row.end())) ++wins;
      CHECK(t.rho[s].front() == doctest::Approx(static_cast<double>(wins) / problems));
    }
  }
}

TEST_CASE("profile from trial records") {
  const auto records = run_trials(tiny_grid(), 1);
  const auto iters = performance_profile(records, ProfileMetric::kIterations);
  const auto time = performance_profile(records, ProfileMetric::kTime);
  check_profile(iters, 4);
  check_profile(time, 4);
  std::ostringstream os;
  write_profile_tsv(os, iters);
  CHECK(os.str().rfind("tau\tthree\tfull\tactive\talmost_active\n", 0) == 0);

  std::vector<TrialRecord> dup{records[0], records[0]};
  CHECK_THROWS_AS(performance_profile(dup, ProfileMetric::kIterations), InvalidArgument);
}
