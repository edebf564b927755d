#pragma once

#include "hmor/geometry.hpp"
#include "hmor/skeleton.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hmor {

/// Ground-truth ordinal label of an ordered pair: +1, -1 or 0 (tie).
enum class RelationLabel : int { kMinus = -1, kTie = 0, kPlus = 1 };

constexpr int value(RelationLabel label) noexcept { return static_cast<int>(label); }

constexpr RelationLabel negate(RelationLabel label) noexcept {
  return static_cast<RelationLabel>(-value(label));
}

/// How body parts enter the part level: as bone vectors compared by angle,
/// or as bone midpoints compared by depth (ablation variant).
enum class PartRepresentation { kVector, kParticle };

/// kProduct clamps label * depth-gap, mirroring the instance error.
/// kLabel clamps the label alone before multiplying, which drops every
/// pair labeled -1; it exists only for side-by-side comparison.
enum class JointClamp { kProduct, kLabel };

enum class JointPairScope { kAll, kIntraPerson };

struct HmorConfig {
  double depth_unit_scale = 1e-3;  // mm -> loss units (meters)
  double equality_tolerance = 0.0;
  double w_instance = 1.0;
  double w_part = 1.0;
  double w_joint = 1.0;
  std::optional<std::size_t> pair_cap;  // per level
  std::uint64_t pair_seed = 0;
  PartRepresentation part_representation = PartRepresentation::kVector;
  JointClamp joint_clamp = JointClamp::kProduct;
  JointPairScope joint_scope = JointPairScope::kAll;

  /// Throws InvalidInput on a non-positive scale, negative tolerance or
  /// negative weight.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Pairwise relations and errors. Inputs are in loss units.

/// +1 when `a` is closer than `b` along `view`, -1 when farther, 0 within
/// the tolerance.
RelationLabel relation_instance(const Vec3& a, const Vec3& b, const Vec3& view,
                                double tolerance = 0.0);

/// log(1 + max(0, label * (a - b) . view))
double err_instance(const Vec3& pred_a, const Vec3& pred_b, RelationLabel label,
                    const Vec3& view);

/// Angle ordering of two parts seen along `view`. The label is the negated
/// sign of (t1 x t2) . view so that a prediction turning the same way as
/// the ground truth produces a non-positive product and is not penalized.
RelationLabel relation_part(const Vec3& t1, const Vec3& t2, const Vec3& view,
                            double tolerance = 0.0);

/// max(0, label * (t1 x t2) . view)
double err_part(const Vec3& pred_t1, const Vec3& pred_t2, RelationLabel label,
                const Vec3& view);

/// Depth ordering of two part midpoints; same form as err_instance.
double err_part_particle(const Vec3& pred_c1, const Vec3& pred_c2,
                         RelationLabel label, const Vec3& view);

RelationLabel relation_joint(const Vec3& k1, const Vec3& k2, const Vec3& view,
                             double tolerance = 0.0);

double err_joint(const Vec3& pred_k1, const Vec3& pred_k2, RelationLabel label,
                 const Vec3& view, JointClamp clamp = JointClamp::kProduct);

/// Value of a pairwise error together with its gradient with respect to
/// both arguments. The subgradient at a clamp kink is zero.
struct PairGradient {
  double value = 0.0;
  Vec3 d_first = Vec3::Zero();
  Vec3 d_second = Vec3::Zero();
};

PairGradient err_instance_grad(const Vec3& pred_a, const Vec3& pred_b,
                               RelationLabel label, const Vec3& view);
PairGradient err_part_grad(const Vec3& pred_t1, const Vec3& pred_t2,
                           RelationLabel label, const Vec3& view);
PairGradient err_part_particle_grad(const Vec3& pred_c1, const Vec3& pred_c2,
                                    RelationLabel label, const Vec3& view);
PairGradient err_joint_grad(const Vec3& pred_k1, const Vec3& pred_k2,
                            RelationLabel label, const Vec3& view,
                            JointClamp clamp = JointClamp::kProduct);

// ---------------------------------------------------------------------------
// Pair sets.

struct InstancePair {
  int first = 0;
  int second = 0;
  RelationLabel label = RelationLabel::kTie;
};

struct ElementRef {
  int person = 0;
  int index = 0;  // part index or joint index

  bool operator==(const ElementRef&) const = default;
};

struct ElementPair {
  ElementRef first;
  ElementRef second;
  RelationLabel label = RelationLabel::kTie;
};

/// Unordered, deduplicated pairs at each level with ground-truth labels
/// computed under one view. Pairs are stored with first < second in the
/// flattened (person, index) order.
struct RelationPairs {
  std::vector<InstancePair> instance;
  std::vector<ElementPair> part;
  std::vector<ElementPair> joint;
};

/// Absolute poses converted to loss units.
std::vector<AbsolutePose> to_loss_units(std::span<const AbsolutePose> poses_mm,
                                        double depth_unit_scale);

/// Enumerates all instance pairs (none for a single person), and all
/// intra- and inter-person part and joint pairs, labeled from the given
/// poses (already in loss units). With a pair cap, each level is
/// uniformly subsampled with a generator seeded from `pair_seed`.
RelationPairs enumerate_pairs(std::span<const AbsolutePose> poses,
                              const SkeletonTopology& topology, const Vec3& view,
                              const HmorConfig& config);

RelationPairs enumerate_pairs(const Scene& gt_scene, const ViewVector& view,
                              const HmorConfig& config);

struct HmorLoss {
  double total = 0.0;
  double instance = 0.0;  // unweighted mean error
  double part = 0.0;
  double joint = 0.0;
};

/// Weighted sum of per-level mean errors. `pred` is in loss units. When
/// `gradient` is non-null it must have the shape of `pred` and receives the
/// gradient of `total` added in place.
HmorLoss hmor_loss(std::span<const AbsolutePose> pred,
                   const SkeletonTopology& topology, const RelationPairs& pairs,
                   const Vec3& view, const HmorConfig& config,
                   std::vector<AbsolutePose>* gradient = nullptr);

HmorLoss hmor_loss(const Scene& pred_scene, const RelationPairs& pairs,
                   const ViewVector& view, const HmorConfig& config);

/// Part labels derived from 2D keypoints only: each part becomes the planar
/// vector (du, dv, 0) and is labeled with view (0, 0, 1). `pixels` holds one
/// joint list per person. Pair order matches enumerate_pairs.
std::vector<ElementPair> part_relations_from_2d(
    std::span<const std::vector<Vec2>> pixels, const SkeletonTopology& topology,
    double tolerance = 0.0);

}  // namespace hmor
