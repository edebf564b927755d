#include "hmor/metrics.hpp"
#include "hmor/ordinal.hpp"
#include "hmor/solver.hpp"
#include "hmor/synth.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace hmor;

struct Fixture {
  Scene gt;
  Scene pred;
};

Fixture make_fixture(int persons) {
  GenSpec spec;
  spec.seed = 17;
  spec.n_persons = persons;
  const Scene gt = generate_scene(spec);
  spec.perturbation = GaussPerturbation{20.0, 300.0};
  return {gt, perturb(gt, spec)};
}

void BM_EnumeratePairs(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)));
  const auto view = ViewVector::camera_normal();
  const HmorConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_pairs(f.gt, view, cfg));
}
BENCHMARK(BM_EnumeratePairs)->Arg(1)->Arg(4)->Arg(8)->Arg(16);

void BM_HmorLoss(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)));
  const auto view = ViewVector::camera_normal();
  const HmorConfig cfg;
  const auto pairs = enumerate_pairs(f.gt, view, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(hmor_loss(f.pred, pairs, view, cfg));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<long>(pairs.instance.size() + pairs.part.size() +
                                            pairs.joint.size()));
}
BENCHMARK(BM_HmorLoss)->Arg(1)->Arg(4)->Arg(8)->Arg(16);

void BM_Evaluate(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(f.pred, f.gt));
}
BENCHMARK(BM_Evaluate)->Arg(2)->Arg(8);

void BM_ObjectiveStep(benchmark::State& state) {
  const auto f = make_fixture(static_cast<int>(state.range(0)));
  SolverConfig cfg;
  cfg.free_variables = state.range(1) != 0 ? FreeVariables::kFullPose : FreeVariables::kRootDepthsOnly;
  const std::vector<ViewVector> views{ViewVector::camera_normal()};
  const auto pairs = build_view_pairs(f.gt, views, cfg.hmor);
  const SceneParameterization params(f.pred, cfg.free_variables, cfg.hmor.depth_unit_scale);
  for (auto _ : state) benchmark::DoNotOptimize(objective(f.pred, pairs, f.pred, cfg, params));
}
BENCHMARK(BM_ObjectiveStep)->Args({4, 0})->Args({4, 1})->Args({8, 1});

void BM_Refine(benchmark::State& state) {
  const auto f = make_fixture(4);
  SolverConfig cfg;
  cfg.steps = 50;
  cfg.views_per_step = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(refine(f.pred, f.gt, cfg));
}
BENCHMARK(BM_Refine)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
