// Serial references against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "proxbundle/bench.hpp"
#include "proxbundle/problems.hpp"
#include "proxbundle/rng.hpp"

using namespace proxbundle;

namespace {

GridConfig small_grid() {
  GridConfig g;
  g.dimensions = {4};
  g.reps = 1;
  return g;
}

const std::vector<GridProblem>& grid_problems() {
  static const std::vector<GridProblem> problems = generate_grid_problems(small_grid(), 1);
  return problems;
}

void BM_TrialsSerial(benchmark::State& state) {
  const auto& problems = grid_problems();
  for (auto _ : state) benchmark::DoNotOptimize(run_trials_serial(problems, small_grid()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(problems.size()) * 12);
}

void BM_TrialsParallel(benchmark::State& state) {
  const auto& problems = grid_problems();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_trials(problems, small_grid(), threads));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(problems.size()) * 12);
}

// Large piece counts are where the parallel evaluation pays off.
MaxQuadProblem eval_problem(int n) { return generate_max_quad({n, n, 1, 1, 1.0, 11, false}); }

void BM_EvalSerial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MaxQuadProblem p = eval_problem(n);
  Rng rng(3);
  const Vector x = p.z + rng.normal_vector(n);
  for (auto _ : state) benchmark::DoNotOptimize(eval_max_quad_serial(p, x));
}

void BM_EvalParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MaxQuadProblem p = eval_problem(n);
  Rng rng(3);
  const Vector x = p.z + rng.normal_vector(n);
  for (auto _ : state) benchmark::DoNotOptimize(eval_max_quad(p, x));
}

}  // namespace

BENCHMARK(BM_TrialsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsParallel)->DenseRange(1, 4, 1)->Arg(omp_get_max_threads())->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvalSerial)->Arg(10)->Arg(25)->Arg(100)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EvalParallel)->Arg(10)->Arg(25)->Arg(100)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
