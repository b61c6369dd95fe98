#include <benchmark/benchmark.h>

#include "mfg/learners.h"
#include "mfg/metrics.h"

namespace {

using namespace mfg;

void BM_ProjectSimplex(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(1);
  Vector v(d);
  for (double& x : v) x = 2.0 * rng.uniform() - 0.5;
  Vector work(d);
  for (auto _ : state) {
    work = v;
    project_simplex_inplace(work);
    benchmark::DoNotOptimize(work.data());
  }
  state.SetComplexityN(d);
}
BENCHMARK(BM_ProjectSimplex)->RangeMultiplier(4)->Range(4, 1024)->Complexity();

void BM_SemiSgdStepRing(benchmark::State& state) {
  const RingRoadEnv env = ring_road_env(static_cast<int>(state.range(0)));
  const auto phi = one_hot_feature_map(env.states(), env.actions());
  const auto basis = one_hot_measure_basis(env.states());
  const RunConfig config;
  const auto problem = make_problem(env, phi, basis, PolicyOperator::Softmax(1e9), config);
  LearnerState st = init_learner(problem, config);
  for (auto _ : state) semisgd_step(st, problem, 1e-3);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SemiSgdStepRing)->Arg(50)->Arg(200);

void BM_SemiSgdStepTanNormal(benchmark::State& state) {
  const RingRoadEnv env = ring_road_env(200);
  const auto phi = one_hot_feature_map(env.states(), env.actions());
  const auto basis = tan_normal_basis(env.states(), static_cast<int>(state.range(0)));
  const RunConfig config;
  const auto problem = make_problem(env, phi, basis, PolicyOperator::Softmax(1e9), config);
  LearnerState st = init_learner(problem, config);
  for (auto _ : state) semisgd_step(st, problem, 1e-3);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SemiSgdStepTanNormal)->Arg(5)->Arg(20);

void BM_ValueIterationRing(benchmark::State& state) {
  const RingRoadEnv env = ring_road_env(static_cast<int>(state.range(0)));
  const Vector mu(env.num_states(), 1.0 / env.num_states());
  for (auto _ : state) {
    auto vi = value_iteration(env, mu);
    benchmark::DoNotOptimize(vi.v.data());
  }
}
BENCHMARK(BM_ValueIterationRing)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_InducedPopulationRing(benchmark::State& state) {
  const RingRoadEnv env = ring_road_env(static_cast<int>(state.range(0)));
  const Policy pi = uniform_policy(env.actions());
  for (auto _ : state) {
    auto mu = induced_population(pi, env);
    benchmark::DoNotOptimize(mu.data());
  }
}
BENCHMARK(BM_InducedPopulationRing)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
