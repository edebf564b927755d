#pragma once

#include "hmor/depth.hpp"
#include "hmor/metrics.hpp"
#include "hmor/ordinal.hpp"
#include "hmor/skeleton.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace hmor {

enum class FreeVariables { kRootDepthsOnly, kFullPose };

struct SolverConfig {
  int steps = 500;
  double step_size = 1e-2;
  LossWeights weights;
  HmorConfig hmor;
  /// Views per step, the camera normal included. Extra views are sampled
  /// on the hemisphere; fresh each step unless step halving is on, in which
  /// case they are drawn once so the objective stays fixed.
  int views_per_step = 1;
  bool resample_views = true;
  bool step_halving = false;
  int max_halvings = 40;
  FreeVariables free_variables = FreeVariables::kRootDepthsOnly;
  std::uint64_t seed = 0;
  double divergence_limit = 1e12;

  void validate() const;
};

/// Packs the optimizable quantities of a scene into a flat vector.
///
/// Root depths are stored in loss units. With kFullPose every person also
/// carries, per joint, box-relative pixel offsets divided by sqrt(fx * fy)
/// and the depth offset z_rel in loss units (the root's z_rel stays 0 and
/// is not a variable). Boxes, RoI areas and the camera are held fixed.
class SceneParameterization {
 public:
  SceneParameterization(const Scene& base, FreeVariables mode, double depth_unit_scale);

  std::vector<double> pack(const Scene& scene) const;
  Scene unpack(std::span<const double> x) const;
  std::size_t size() const noexcept;
  FreeVariables mode() const noexcept { return mode_; }

  /// Index of person m's root depth inside the packed vector.
  std::size_t root_index(int person) const noexcept;

 private:
  std::size_t block_size() const noexcept;

  Scene base_;
  FreeVariables mode_;
  double scale_;
  double focal_;
};

struct ViewPairs {
  Vec3 view;
  RelationPairs pairs;
};

/// Builds ground-truth pair sets for each view.
std::vector<ViewPairs> build_view_pairs(const Scene& gt, std::span<const ViewVector> views,
                                        const HmorConfig& config);

struct ObjectiveResult {
  double value = 0.0;
  LossComponents components;  // unweighted
  std::vector<double> gradient;
};

/// Weighted objective of the predicted scene. Data terms (pose, init,
/// refine, abs) are measured against `anchors`; the ordinal term averages
/// hmor_loss over the given views. Terms with zero weight are skipped.
/// Throws NumericalError naming the term when a value is non-finite.
ObjectiveResult objective(const Scene& pred, std::span<const ViewPairs> gt_pairs,
                          const Scene& anchors, const SolverConfig& config,
                          const SceneParameterization& params);

/// Smallest absolute clamp argument (ordinal hinge or L1 residual) among
/// the active terms; finite differences are only meaningful when this is
/// well above the step.
double clamp_margin(const Scene& pred, std::span<const ViewPairs> gt_pairs,
                    const Scene& anchors, const SolverConfig& config);

struct TraceRow {
  int step = 0;
  double value = 0.0;
  long long violations = 0;  // all levels, camera normal only
};

struct RefineResult {
  Scene refined;
  std::vector<TraceRow> trace;
  ViolationCounts final_violations;  // camera normal only
};

/// Gradient descent on the free variables of `pred`. Data terms are
/// anchored to `pred` as given; `gt` supplies only the ordinal labels.
/// Throws SolverError when the objective exceeds the divergence limit.
RefineResult refine(const Scene& pred, const Scene& gt, const SolverConfig& config);

/// Same, with explicit anchors for the data terms.
RefineResult refine(const Scene& pred, const Scene& gt, const Scene& anchors,
                    const SolverConfig& config);

// ---------------------------------------------------------------------------
// Gradient checking.

struct DifferentiableFunction {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

/// Central-difference check: max_i |analytic_i - numeric_i| divided by the
/// larger of the two gradients' max-norms (or the absolute discrepancy when
/// both gradients vanish).
double grad_check(const DifferentiableFunction& fn, std::span<const double> x,
                  double epsilon);

enum class GradTerm {
  kErrInstance,
  kErrPart,
  kErrPartParticle,
  kErrJoint,
  kLossPose,
  kLossInit,
  kLossRefine,
  kLossAbs,
  kObjective,
};

std::string_view to_string(GradTerm term);
std::span<const GradTerm> all_grad_terms();

/// A term frozen at one evaluation point.
struct GradProblem {
  DifferentiableFunction fn;
  std::vector<double> point;
  double margin = 0.0;  // smallest |clamp argument| at the point
};

/// Draws a random evaluation point for `term` at least 10 * epsilon away
/// from every clamp boundary. Ordinal terms are drawn in wrong order so
/// their gradients are non-zero.
GradProblem random_grad_problem(GradTerm term, std::mt19937_64& rng, double epsilon);

/// Scene-level check of the full objective with respect to every free
/// variable of `pred`.
double grad_check(const Scene& pred, const Scene& gt, const Scene& anchors,
                  const SolverConfig& config, double epsilon);

}  // namespace hmor
