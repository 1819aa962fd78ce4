#include <benchmark/benchmark.h>

#include "linreplay/learner.hpp"
#include "linreplay/linalg.hpp"
#include "linreplay/metrics.hpp"
#include "linreplay/oracle.hpp"
#include "linreplay/task_gen.hpp"

using namespace linreplay;

static void BM_OrthonormalBasis(benchmark::State& state) {
  const Index d = state.range(0);
  Rng rng(1);
  const Matrix rows = rng.gaussian_matrix(d / 2, d);
  for (auto _ : state) benchmark::DoNotOptimize(orthonormal_basis(rows));
}
BENCHMARK(BM_OrthonormalBasis)->Arg(16)->Arg(64)->Arg(152);

static void BM_FitClosedForm(benchmark::State& state) {
  const Index d = state.range(0);
  Rng rng(2);
  const Vector w_star = rng.unit_vector(d);
  const Task task = sample_task(random_subspace(d, d / 2, rng), d / 2, w_star, rng);
  const Vector w_prev = rng.gaussian_vector(d);
  for (auto _ : state) benchmark::DoNotOptimize(fit_closed_form(w_prev, task));
}
BENCHMARK(BM_FitClosedForm)->Arg(16)->Arg(64)->Arg(152);

static void BM_FitGd(benchmark::State& state) {
  const Index d = state.range(0);
  Rng rng(3);
  const Vector w_star = rng.unit_vector(d);
  const Task task = sample_task(random_subspace(d, d / 4, rng), d, w_star, rng);
  GdConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.epochs = 50000;
  cfg.convergence_tol = 1e-10;
  cfg.step_rule = StepRule::kInverseLipschitz;
  for (auto _ : state) {
    Rng r(4);
    benchmark::DoNotOptimize(fit_gd(Vector::Zero(d), task, cfg, r));
  }
}
BENCHMARK(BM_FitGd)->Arg(16)->Arg(64);

static void BM_HighDimReplayTrials(benchmark::State& state) {
  const AvgCaseHighDim c = make_avg_case_highdim(152, 0.4, Vector::Unit(152, 1));
  const auto trials = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(expected_replay_forgetting_two_tasks(c.task1, c.task2, Vector::Unit(152, 1), 10, trials, Rng(5)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HighDimReplayTrials)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_ClaimC2(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(oracle_claim_c2(100000, Rng(6)));
  state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_ClaimC2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
