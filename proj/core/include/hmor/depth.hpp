#pragma once

#include "hmor/geometry.hpp"
#include "hmor/skeleton.hpp"

#include <span>
#include <vector>

namespace hmor {

// Coarse-to-fine human depth. Normalized depths are millimeters divided by
// sqrt(fx * fy); equivalent depths further account for RoI resizing.

double normalize_depth(double z_abs, const Camera& camera);

/// z_norm * sqrt(a_box / a_roi)
double equivalent_depth(double z_norm, double a_box, double a_roi);

/// (delta + z_eq_init) * sqrt(fx * fy * a_roi / a_box). Throws InvalidDepth
/// when the result is not positive.
double recover_absolute_depth(double delta, double z_eq_init, const Camera& camera,
                              double a_box, double a_roi);

struct DepthEstimate {
  double z_init_norm = 0.0;
  double z_eq_init = 0.0;
  double delta = 0.0;
  double a_box = 0.0;
  double a_roi = 0.0;
};

/// Fills z_eq_init from z_init_norm and the two areas.
DepthEstimate make_depth_estimate(double z_init_norm, double delta, double a_box,
                                  double a_roi);

/// Mean |z_norm_gt - z_init| over persons.
double loss_init(std::span<const double> pred_z_norm, std::span<const double> gt_z_abs,
                 const Camera& camera);

/// Mean |z_eq_norm_gt - z_eq_init - delta| over persons, with the ground
/// truth equivalent depth taken at each estimate's own box/RoI areas.
double loss_refine(std::span<const DepthEstimate> pred, std::span<const double> gt_z_abs,
                   const Camera& camera);

/// (1/N)(1/J) sum of per-joint L1 distances over (u, v, z_rel).
double loss_pose(std::span<const RelativePose> pred, std::span<const RelativePose> gt);

/// (1/N)(1/J) sum of per-joint L1 distances over absolute coordinates.
double loss_abs(std::span<const AbsolutePose> pred, std::span<const AbsolutePose> gt);

// Gradients with respect to the predicted argument; sign(0) is taken as 0.
std::vector<double> loss_init_grad(std::span<const double> pred_z_norm,
                                   std::span<const double> gt_z_abs,
                                   const Camera& camera);
/// Gradient with respect to each estimate's delta. The gradient with
/// respect to z_eq_init is identical.
std::vector<double> loss_refine_grad(std::span<const DepthEstimate> pred,
                                     std::span<const double> gt_z_abs,
                                     const Camera& camera);
std::vector<RelativePose> loss_pose_grad(std::span<const RelativePose> pred,
                                         std::span<const RelativePose> gt);
std::vector<AbsolutePose> loss_abs_grad(std::span<const AbsolutePose> pred,
                                        std::span<const AbsolutePose> gt);

struct LossComponents {
  double pose = 0.0;
  double init = 0.0;
  double refine = 0.0;
  double hmor = 0.0;
  double abs = 0.0;
};

/// The training objective minus the detection term. The absolute-pose
/// term is off by default and serves as the ablation baseline.
struct LossWeights {
  double pose = 1.0;
  double init = 1.0;
  double refine = 1.0;
  double hmor = 1.0;
  double abs = 0.0;

  void validate() const;
};

double total_loss(const LossComponents& components, const LossWeights& weights = {});

}  // namespace hmor
