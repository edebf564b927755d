#pragma once

#include "hmor/geometry.hpp"
#include "hmor/ordinal.hpp"
#include "hmor/skeleton.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace hmor {

enum class Alignment { kNone, kRoot, kProcrustes };

enum class MatchCost {
  kRootAligned3d,  // root-aligned mean joint distance, mm
  kProjection2d,   // mean distance of projected joints, px
};

/// One-to-one assignment between prediction rows and ground-truth columns.
struct Assignment {
  std::vector<std::pair<int, int>> matches;  // (pred, gt), sorted by pred
  std::vector<int> unmatched_pred;
  std::vector<int> unmatched_gt;
  double total_cost = 0.0;

  std::optional<int> gt_for(int pred) const;
  std::optional<int> pred_for(int gt) const;
};

/// Minimum-total-cost assignment (Hungarian method) for a rectangular
/// cost matrix; min(rows, cols) pairs are matched.
Assignment solve_assignment(const Eigen::MatrixXd& cost);

Eigen::MatrixXd matching_costs(const Scene& pred, const Scene& gt,
                               MatchCost cost = MatchCost::kRootAligned3d);

Assignment match_persons(const Scene& pred, const Scene& gt,
                         MatchCost cost = MatchCost::kRootAligned3d);

/// Similarity transform (rotation, translation, uniform scale) of `pred`
/// onto `gt` minimizing squared error.
AbsolutePose procrustes_align(std::span<const Vec3> pred, std::span<const Vec3> gt);

/// Per-joint Euclidean errors after the requested alignment.
std::vector<double> joint_errors(std::span<const Vec3> pred, std::span<const Vec3> gt,
                                 Alignment alignment, int root_index = 0);

double mpjpe(std::span<const Vec3> pred, std::span<const Vec3> gt, Alignment alignment,
             int root_index = 0);

/// Percentage of errors <= threshold (inclusive).
double pck(std::span<const double> errors, double threshold_mm);

/// Mean of pck over the threshold grid.
double auc(std::span<const double> errors, std::span<const double> thresholds_mm);

/// Uniform grid lo, lo+step, ..., hi (inclusive, within rounding).
std::vector<double> threshold_grid(double lo_mm, double hi_mm, double step_mm);

struct ViolationCounts {
  long long instance = 0;
  long long part = 0;
  long long joint = 0;

  long long total() const noexcept { return instance + part + joint; }
  ViolationCounts& operator+=(const ViolationCounts& other);
  bool operator==(const ViolationCounts&) const = default;
};

/// Pairs whose predicted relation disagrees with ground truth, summed over
/// views. Persons are matched by index; all pairs are audited (no cap).
ViolationCounts ordinal_violations(std::span<const AbsolutePose> pred_mm,
                                   std::span<const AbsolutePose> gt_mm,
                                   const SkeletonTopology& topology,
                                   std::span<const ViewVector> views,
                                   const HmorConfig& config);

ViolationCounts ordinal_violations(const Scene& pred, const Scene& gt,
                                   std::span<const ViewVector> views,
                                   const HmorConfig& config = {});

struct MetricConfig {
  double pck_threshold_mm = 150.0;
  double auc_min_mm = 1.0;
  double auc_max_mm = 150.0;
  double auc_step_mm = 1.0;
  MatchCost match_cost = MatchCost::kRootAligned3d;

  void validate() const;
};

struct MetricReport {
  double mpjpe = 0.0;      // root aligned, mm
  double pa_mpjpe = 0.0;   // similarity aligned, mm
  double abs_mpjpe = 0.0;  // no alignment, mm
  double pck_rel = 0.0;    // percent
  double pck_abs = 0.0;
  double auc_rel = 0.0;
  ViolationCounts ordinal_violations;
  std::vector<std::pair<int, int>> matched_pairs;  // (pred, gt)
  int unmatched_pred = 0;
  int unmatched_gt = 0;
  long long joint_count = 0;  // joints entering PCK, unmatched gt included
  std::vector<std::pair<double, double>> pck_rel_curve;  // (threshold, pck)
};

/// Matches persons and computes every metric. Unmatched ground-truth
/// persons count as all-incorrect joints in PCK/AUC and are excluded from
/// the MPJPE family. Violations are audited on matched persons only.
MetricReport evaluate(const Scene& pred, const Scene& gt, const MetricConfig& config = {},
                      std::span<const ViewVector> audit_views = {},
                      const HmorConfig& hmor_config = {});

}  // namespace hmor
