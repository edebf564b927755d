#include "hmor/error.hpp"
#include "hmor/solver.hpp"
#include "hmor/synth.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace hmor {
namespace {

Scene swapped(const Scene& gt) {
  Scene pred = gt;
  std::swap(pred.persons[0].root_depth, pred.persons[1].root_depth);
  return pred;
}

std::vector<ViewPairs> normal_pairs(const Scene& gt, const HmorConfig& cfg = {}) {
  const std::vector<ViewVector> views{ViewVector::camera_normal()};
  return build_view_pairs(gt, views, cfg);
}

TEST(Parameterization, PackUnpackRoundTrip) {
  GenSpec spec;
  spec.seed = 1;
  spec.n_persons = 2;
  const Scene scene = generate_scene(spec);
  for (auto mode : {FreeVariables::kRootDepthsOnly, FreeVariables::kFullPose}) {
    const SceneParameterization params(scene, mode, 1e-3);
    const auto x = params.pack(scene);
    EXPECT_EQ(x.size(), params.size());
    const Scene back = params.unpack(x);
    for (std::size_t m = 0; m < scene.persons.size(); ++m) {
      EXPECT_NEAR(back.persons[m].root_depth, scene.persons[m].root_depth, 1e-9);
      for (std::size_t j = 0; j < 17; ++j) {
        EXPECT_NEAR(back.persons[m].joints[j].u, scene.persons[m].joints[j].u, 1e-9);
        EXPECT_NEAR(back.persons[m].joints[j].z_rel, scene.persons[m].joints[j].z_rel, 1e-9);
      }
    }
  }
  const SceneParameterization full(scene, FreeVariables::kFullPose, 1e-3);
  EXPECT_EQ(full.size(), 2u * (1 + 17 * 2 + 16));
}

TEST(Objective, ZeroAtTruth) {
  GenSpec spec;
  spec.seed = 2;
  spec.n_persons = 3;
  const Scene gt = generate_scene(spec);
  SolverConfig cfg;
  cfg.weights.abs = 1;
  cfg.free_variables = FreeVariables::kFullPose;
  const SceneParameterization params(gt, cfg.free_variables, 1e-3);
  const auto r = objective(gt, normal_pairs(gt), gt, cfg, params);
  EXPECT_EQ(r.value, 0.0);
  for (double g : r.gradient) EXPECT_EQ(g, 0.0);
}

TEST(Objective, ZeroWeightsGiveZero) {
  const Scene gt = oracle::flat_two_person_scene(3000, 4200);
  const Scene pred = swapped(gt);
  SolverConfig cfg;
  cfg.weights = {0, 0, 0, 0, 0};
  const SceneParameterization params(pred, cfg.free_variables, 1e-3);
  Scene anchors = gt;
  anchors.persons[0].root_depth = 9000;
  EXPECT_EQ(objective(pred, normal_pairs(gt), anchors, cfg, params).value, 0.0);
}

TEST(Objective, HmorGradientPushesTowardCorrectOrder) {
  const Scene gt = oracle::flat_two_person_scene(3000, 4200);
  const Scene pred = swapped(gt);
  SolverConfig cfg;
  cfg.weights = {0, 0, 0, 1, 0};
  const SceneParameterization params(pred, cfg.free_variables, 1e-3);
  const auto pairs = normal_pairs(gt);
  const auto r = objective(pred, pairs, pred, cfg, params);
  // Person 0 should come closer (positive gradient) and person 1 recede.
  EXPECT_GT(r.gradient[0], 0.0);
  EXPECT_LT(r.gradient[1], 0.0);
  auto f = [&](const std::vector<double>& x) {
    return objective(params.unpack(x), pairs, pred, cfg, params).value;
  };
  const auto num = oracle::numeric_gradient(f, params.pack(pred), 1e-6);
  EXPECT_NEAR(r.gradient[0], num[0], 1e-6);
  EXPECT_NEAR(r.gradient[1], num[1], 1e-6);
}

TEST(Objective, GradientMatchesFiniteDifferencesInFullPose) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 3; ++i) {
    const auto problem = random_grad_problem(GradTerm::kObjective, rng, 1e-6);
    const auto analytic = problem.fn.gradient(problem.point);
    auto f = [&](const std::vector<double>& x) { return problem.fn.value(x); };
    const auto num = oracle::numeric_gradient(f, problem.point, 1e-6);
    double worst = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < num.size(); ++k) {
      worst = std::max(worst, std::abs(num[k] - analytic[k]));
      scale = std::max(scale, std::abs(num[k]));
    }
    EXPECT_LT(worst / scale, 1e-5);
  }
}

TEST(Objective, NonFiniteTermIsNamed) {
  const Scene gt = oracle::flat_two_person_scene(3000, 4200);
  Scene pred = gt;
  pred.persons[0].joints[3].u = std::numeric_limits<double>::infinity();
  SolverConfig cfg;
  const SceneParameterization params(gt, cfg.free_variables, 1e-3);
  try {
    objective(pred, normal_pairs(gt), gt, cfg, params);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_FALSE(e.term().empty());
  }
}

TEST(Refine, OptimalInputUnchanged) {
  GenSpec spec;
  spec.seed = 4;
  spec.n_persons = 2;
  const Scene gt = generate_scene(spec);
  SolverConfig cfg;
  cfg.steps = 20;
  const auto r = refine(gt, gt, cfg);
  for (std::size_t m = 0; m < gt.persons.size(); ++m) {
    EXPECT_NEAR(r.refined.persons[m].root_depth, gt.persons[m].root_depth, 1e-9);
  }
  EXPECT_EQ(r.final_violations.total(), 0);
}

TEST(Refine, SwapResolvedWithHmor) {
  const Scene gt = oracle::flat_two_person_scene(3000, 4200);
  SolverConfig cfg;
  cfg.weights = {0, 0, 0, 1, 0};
  cfg.step_size = 1.0;
  cfg.steps = 300;
  const auto r = refine(swapped(gt), gt, cfg);
  EXPECT_EQ(r.final_violations.instance, 0);
  EXPECT_EQ(r.trace.size(), 301u);
  EXPECT_EQ(r.trace.back().violations, r.final_violations.total());
}

TEST(Refine, SwapPersistsWithoutHmor) {
  const Scene gt = oracle::flat_two_person_scene(3000, 4200);
  SolverConfig cfg;
  cfg.weights = {1, 1, 1, 0, 0};
  cfg.steps = 100;
  const auto r = refine(swapped(gt), gt, cfg);
  EXPECT_EQ(r.final_violations.instance, 1);
}

TEST(Refine, HalvingTraceIsMonotone) {
  GenSpec spec;
  spec.seed = 5;
  spec.n_persons = 3;
  const Scene gt = generate_scene(spec);
  spec.perturbation = GaussPerturbation{0, 300};
  const Scene pred = perturb(gt, spec);
  SolverConfig cfg;
  cfg.step_halving = true;
  cfg.step_size = 5.0;
  cfg.views_per_step = 4;
  cfg.steps = 100;
  cfg.weights.hmor = 10;
  const auto r = refine(pred, gt, cfg);
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    EXPECT_LE(r.trace[k].value, r.trace[k - 1].value);
  }
}

TEST(Refine, SmallStepDecreasesHmorWhenAllPairsWrong) {
  // Mirror every depth: the prediction reverses all instance orderings.
  const Scene gt = oracle::flat_two_person_scene(3000, 4200);
  const Scene pred = swapped(gt);
  SolverConfig cfg;
  cfg.weights = {0, 0, 0, 1, 0};
  cfg.hmor.w_part = cfg.hmor.w_joint = 0;
  cfg.step_size = 1e-4;
  cfg.steps = 1;
  const auto r = refine(pred, gt, cfg);
  EXPECT_LT(r.trace[1].value, r.trace[0].value);
}

TEST(Refine, DivergenceSurfacesAsSolverError) {
  GenSpec spec;
  spec.seed = 6;
  spec.n_persons = 2;
  const Scene gt = generate_scene(spec);
  spec.perturbation = GaussPerturbation{0, 300};
  SolverConfig cfg;
  cfg.divergence_limit = 1e-6;
  cfg.steps = 5;
  EXPECT_THROW(refine(perturb(gt, spec), gt, cfg), SolverError);
}

TEST(Refine, RejectsBadConfigAndMismatch) {
  const Scene gt = oracle::flat_two_person_scene(3000, 4200);
  SolverConfig cfg;
  cfg.steps = 0;
  EXPECT_THROW(refine(gt, gt, cfg), InvalidInput);
  cfg = {};
  Scene one = gt;
  one.persons.pop_back();
  EXPECT_THROW(refine(one, gt, cfg), InvalidInput);
}

TEST(Refine, Deterministic) {
  GenSpec spec;
  spec.seed = 7;
  spec.n_persons = 3;
  const Scene gt = generate_scene(spec);
  spec.perturbation = GaussPerturbation{0, 300};
  const Scene pred = perturb(gt, spec);
  SolverConfig cfg;
  cfg.views_per_step = 4;
  cfg.steps = 30;
  cfg.seed = 99;
  const auto a = refine(pred, gt, cfg);
  const auto b = refine(pred, gt, cfg);
  EXPECT_EQ(a.refined, b.refined);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) EXPECT_EQ(a.trace[k].value, b.trace[k].value);
}

TEST(GradCheck, LinearTermIsExact) {
  std::mt19937_64 rng(8);
  const auto problem = random_grad_problem(GradTerm::kLossAbs, rng, 1e-5);
  EXPECT_LT(grad_check(problem.fn, problem.point, 1e-5), 1e-8);
}

TEST(GradCheck, EveryTermPasses) {
  std::mt19937_64 rng(9);
  for (GradTerm term : all_grad_terms()) {
    const int points = term == GradTerm::kObjective ? 2 : 20;
    for (int p = 0; p < points; ++p) {
      const auto problem = random_grad_problem(term, rng, 1e-5);
      EXPECT_GE(problem.margin, 10 * 1e-5);
      EXPECT_LT(grad_check(problem.fn, problem.point, 1e-5), 1e-5) << to_string(term);
    }
  }
}

TEST(GradCheck, DetectsWrongGradient) {
  DifferentiableFunction fn{
      [](std::span<const double> x) { return x[0] * x[0]; },
      [](std::span<const double> x) { return std::vector<double>{3 * x[0]}; }};
  const std::vector<double> x{1.0};
  EXPECT_GT(grad_check(fn, x, 1e-5), 0.1);
}

TEST(GradCheck, SceneLevel) {
  GenSpec spec;
  spec.seed = 10;
  spec.n_persons = 2;
  const Scene gt = generate_scene(spec);
  spec.perturbation = GaussPerturbation{0, 300};
  const Scene pred = perturb(gt, spec);
  SolverConfig cfg;
  cfg.weights = {0, 0, 0, 1, 0};
  cfg.views_per_step = 3;
  const std::vector<ViewVector> views{ViewVector::camera_normal()};
  EXPECT_LT(grad_check(pred, gt, pred, cfg, 1e-6), 1e-5);
}

}  // namespace
}  // namespace hmor
