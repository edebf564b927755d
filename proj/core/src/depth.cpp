#include "hmor/depth.hpp"

#include "hmor/error.hpp"

#include <cmath>
#include <string>

namespace hmor {

namespace {

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_areas(double a_box, double a_roi) {
  if (!(a_box > 0.0) || !(a_roi > 0.0)) {
    throw InvalidInput("box and RoI areas must be positive");
  }
}

void require_same_count(std::size_t pred, std::size_t gt, const char* what) {
  if (pred != gt) {
    throw InvalidInput(std::string(what) + ": prediction has " + std::to_string(pred) +
                       " persons, ground truth has " + std::to_string(gt));
  }
  if (pred == 0) {
    throw InvalidInput(std::string(what) + ": needs at least one person");
  }
}

template <typename Pose>
std::size_t require_same_shape(std::span<const Pose> pred, std::span<const Pose> gt,
                               const char* what) {
  require_same_count(pred.size(), gt.size(), what);
  const std::size_t joints = gt.front().size();
  for (std::size_t m = 0; m < pred.size(); ++m) {
    if (pred[m].size() != joints || gt[m].size() != joints) {
      throw InvalidInput(std::string(what) + ": joint counts differ at person " +
                         std::to_string(m));
    }
  }
  if (joints == 0) throw InvalidInput(std::string(what) + ": empty pose");
  return joints;
}

double gt_equivalent(const DepthEstimate& est, double gt_z_abs, const Camera& camera) {
  return equivalent_depth(normalize_depth(gt_z_abs, camera), est.a_box, est.a_roi);
}

}  // namespace

double normalize_depth(double z_abs, const Camera& camera) {
  if (!(z_abs > 0.0)) {
    throw InvalidInput("normalize_depth requires positive depth");
  }
  return z_abs / camera.mean_focal();
}

double equivalent_depth(double z_norm, double a_box, double a_roi) {
  require_areas(a_box, a_roi);
  return z_norm * std::sqrt(a_box / a_roi);
}

double recover_absolute_depth(double delta, double z_eq_init, const Camera& camera,
                              double a_box, double a_roi) {
  require_areas(a_box, a_roi);
  const double z = (delta + z_eq_init) *
                   std::sqrt(camera.fx() * camera.fy() * a_roi / a_box);
  if (!(z > 0.0)) {
    throw InvalidDepth("recovered root depth is not positive: " + std::to_string(z));
  }
  return z;
}

DepthEstimate make_depth_estimate(double z_init_norm, double delta, double a_box,
                                  double a_roi) {
  return {.z_init_norm = z_init_norm,
          .z_eq_init = equivalent_depth(z_init_norm, a_box, a_roi),
          .delta = delta,
          .a_box = a_box,
          .a_roi = a_roi};
}

double loss_init(std::span<const double> pred_z_norm, std::span<const double> gt_z_abs,
                 const Camera& camera) {
  require_same_count(pred_z_norm.size(), gt_z_abs.size(), "loss_init");
  double sum = 0.0;
  for (std::size_t m = 0; m < pred_z_norm.size(); ++m) {
    sum += std::abs(normalize_depth(gt_z_abs[m], camera) - pred_z_norm[m]);
  }
  return sum / static_cast<double>(pred_z_norm.size());
}

double loss_refine(std::span<const DepthEstimate> pred, std::span<const double> gt_z_abs,
                   const Camera& camera) {
  require_same_count(pred.size(), gt_z_abs.size(), "loss_refine");
  double sum = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m) {
    const auto& est = pred[m];
    sum += std::abs(gt_equivalent(est, gt_z_abs[m], camera) - est.z_eq_init - est.delta);
  }
  return sum / static_cast<double>(pred.size());
}

double loss_pose(std::span<const RelativePose> pred, std::span<const RelativePose> gt) {
  const std::size_t joints = require_same_shape(pred, gt, "loss_pose");
  double sum = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m) {
    for (std::size_t j = 0; j < joints; ++j) {
      const auto& p = pred[m][j];
      const auto& g = gt[m][j];
      sum += std::abs(p.u - g.u) + std::abs(p.v - g.v) + std::abs(p.z_rel - g.z_rel);
    }
  }
  return sum / static_cast<double>(pred.size() * joints);
}

double loss_abs(std::span<const AbsolutePose> pred, std::span<const AbsolutePose> gt) {
  const std::size_t joints = require_same_shape(pred, gt, "loss_abs");
  double sum = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m) {
    for (std::size_t j = 0; j < joints; ++j) {
      sum += (pred[m][j] - gt[m][j]).lpNorm<1>();
    }
  }
  return sum / static_cast<double>(pred.size() * joints);
}

std::vector<double> loss_init_grad(std::span<const double> pred_z_norm,
                                   std::span<const double> gt_z_abs,
                                   const Camera& camera) {
  require_same_count(pred_z_norm.size(), gt_z_abs.size(), "loss_init");
  const double inv_n = 1.0 / static_cast<double>(pred_z_norm.size());
  std::vector<double> grad(pred_z_norm.size());
  for (std::size_t m = 0; m < pred_z_norm.size(); ++m) {
    grad[m] = inv_n * sign0(pred_z_norm[m] - normalize_depth(gt_z_abs[m], camera));
  }
  return grad;
}

std::vector<double> loss_refine_grad(std::span<const DepthEstimate> pred,
                                     std::span<const double> gt_z_abs,
                                     const Camera& camera) {
  require_same_count(pred.size(), gt_z_abs.size(), "loss_refine");
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  std::vector<double> grad(pred.size());
  for (std::size_t m = 0; m < pred.size(); ++m) {
    const auto& est = pred[m];
    grad[m] = inv_n * sign0(est.z_eq_init + est.delta - gt_equivalent(est, gt_z_abs[m], camera));
  }
  return grad;
}

std::vector<RelativePose> loss_pose_grad(std::span<const RelativePose> pred,
                                         std::span<const RelativePose> gt) {
  const std::size_t joints = require_same_shape(pred, gt, "loss_pose");
  const double scale = 1.0 / static_cast<double>(pred.size() * joints);
  std::vector<RelativePose> grad(pred.size(), RelativePose(joints));
  for (std::size_t m = 0; m < pred.size(); ++m) {
    for (std::size_t j = 0; j < joints; ++j) {
      const auto& p = pred[m][j];
      const auto& g = gt[m][j];
      grad[m][j] = {scale * sign0(p.u - g.u), scale * sign0(p.v - g.v),
                    scale * sign0(p.z_rel - g.z_rel)};
    }
  }
  return grad;
}

std::vector<AbsolutePose> loss_abs_grad(std::span<const AbsolutePose> pred,
                                        std::span<const AbsolutePose> gt) {
  const std::size_t joints = require_same_shape(pred, gt, "loss_abs");
  const double scale = 1.0 / static_cast<double>(pred.size() * joints);
  std::vector<AbsolutePose> grad(pred.size(), AbsolutePose(joints, Vec3::Zero()));
  for (std::size_t m = 0; m < pred.size(); ++m) {
    for (std::size_t j = 0; j < joints; ++j) {
      const Vec3 d = pred[m][j] - gt[m][j];
      grad[m][j] = scale * Vec3(sign0(d.x()), sign0(d.y()), sign0(d.z()));
    }
  }
  return grad;
}

void LossWeights::validate() const {
  if (!(pose >= 0.0) || !(init >= 0.0) || !(refine >= 0.0) || !(hmor >= 0.0) ||
      !(abs >= 0.0)) {
    throw InvalidInput("objective weights must be non-negative");
  }
}

double total_loss(const LossComponents& c, const LossWeights& w) {
  return w.pose * c.pose + w.init * c.init + w.refine * c.refine + w.hmor * c.hmor +
         w.abs * c.abs;
}

}  // namespace hmor
