#include "hmor/metrics.hpp"

#include "hmor/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hmor {

namespace {

Eigen::Matrix3Xd to_matrix(std::span<const Vec3> pose) {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(pose.size()));
  for (std::size_t j = 0; j < pose.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = pose[j];
  return m;
}

void require_same_joints(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.size() != gt.size()) {
    throw InvalidInput("pose joint counts differ: " + std::to_string(pred.size()) +
                       " vs " + std::to_string(gt.size()));
  }
  if (pred.empty()) throw InvalidInput("empty pose");
}

// Rows <= cols. Returns the column assigned to each row.
std::vector<int> hungarian(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  }
  return row_to_col;
}

std::vector<Vec3> project_pose(std::span<const Vec3> pose, const Camera& camera) {
  std::vector<Vec3> out;
  out.reserve(pose.size());
  for (const auto& k : pose) {
    const Vec2 px = project(camera, k);
    out.emplace_back(px.x(), px.y(), 0.0);
  }
  return out;
}

double mean_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) sum += (a[j] - b[j]).norm();
  return sum / static_cast<double>(a.size());
}

}  // namespace

std::optional<int> Assignment::gt_for(int pred) const {
  for (const auto& [p, g] : matches) {
    if (p == pred) return g;
  }
  return std::nullopt;
}

std::optional<int> Assignment::pred_for(int gt) const {
  for (const auto& [p, g] : matches) {
    if (g == gt) return p;
  }
  return std::nullopt;
}

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  Assignment result;
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (!cost.allFinite()) throw InvalidInput("assignment costs must be finite");
  if (rows == 0 || cols == 0) {
    for (int r = 0; r < rows; ++r) result.unmatched_pred.push_back(r);
    for (int c = 0; c < cols; ++c) result.unmatched_gt.push_back(c);
    return result;
  }
  std::vector<char> col_used(static_cast<std::size_t>(cols), 0);
  std::vector<char> row_used(static_cast<std::size_t>(rows), 0);
  if (rows <= cols) {
    const auto row_to_col = hungarian(cost);
    for (int r = 0; r < rows; ++r) {
      const int c = row_to_col[static_cast<std::size_t>(r)];
      result.matches.emplace_back(r, c);
      row_used[static_cast<std::size_t>(r)] = col_used[static_cast<std::size_t>(c)] = 1;
    }
  } else {
    const Eigen::MatrixXd transposed = cost.transpose();
    const auto col_to_row = hungarian(transposed);
    for (int c = 0; c < cols; ++c) {
      const int r = col_to_row[static_cast<std::size_t>(c)];
      result.matches.emplace_back(r, c);
      row_used[static_cast<std::size_t>(r)] = col_used[static_cast<std::size_t>(c)] = 1;
    }
    std::sort(result.matches.begin(), result.matches.end());
  }
  for (const auto& [r, c] : result.matches) result.total_cost += cost(r, c);
  for (int r = 0; r < rows; ++r) {
    if (!row_used[static_cast<std::size_t>(r)]) result.unmatched_pred.push_back(r);
  }
  for (int c = 0; c < cols; ++c) {
    if (!col_used[static_cast<std::size_t>(c)]) result.unmatched_gt.push_back(c);
  }
  return result;
}

Eigen::MatrixXd matching_costs(const Scene& pred, const Scene& gt, MatchCost cost) {
  if (pred.topology.joint_count != gt.topology.joint_count) {
    throw InvalidInput("prediction and ground truth use different joint counts");
  }
  const auto pred_poses = assemble_scene(pred);
  const auto gt_poses = assemble_scene(gt);
  Eigen::MatrixXd costs(pred.person_count(), gt.person_count());
  for (int i = 0; i < pred.person_count(); ++i) {
    for (int k = 0; k < gt.person_count(); ++k) {
      const auto& p = pred_poses[static_cast<std::size_t>(i)];
      const auto& g = gt_poses[static_cast<std::size_t>(k)];
      if (cost == MatchCost::kProjection2d) {
        costs(i, k) = mean_distance(project_pose(p, pred.camera), project_pose(g, gt.camera));
      } else {
        costs(i, k) = mpjpe(p, g, Alignment::kRoot, gt.topology.root_index);
      }
    }
  }
  return costs;
}

Assignment match_persons(const Scene& pred, const Scene& gt, MatchCost cost) {
  if (pred.persons.empty() || gt.persons.empty()) {
    throw InvalidInput("matching requires non-empty scenes");
  }
  return solve_assignment(matching_costs(pred, gt, cost));
}

AbsolutePose procrustes_align(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  require_same_joints(pred, gt);
  const Eigen::Matrix3Xd src = to_matrix(pred);
  const Eigen::Matrix3Xd dst = to_matrix(gt);
  const Eigen::Matrix4d transform = Eigen::umeyama(src, dst, true);
  AbsolutePose aligned;
  aligned.reserve(pred.size());
  for (const auto& k : pred) {
    aligned.push_back(transform.topLeftCorner<3, 3>() * k + transform.topRightCorner<3, 1>());
  }
  return aligned;
}

std::vector<double> joint_errors(std::span<const Vec3> pred, std::span<const Vec3> gt,
                                 Alignment alignment, int root_index) {
  require_same_joints(pred, gt);
  if (root_index < 0 || static_cast<std::size_t>(root_index) >= gt.size()) {
    throw InvalidInput("root index out of range");
  }
  std::vector<double> errors(pred.size());
  switch (alignment) {
    case Alignment::kNone:
      for (std::size_t j = 0; j < pred.size(); ++j) errors[j] = (pred[j] - gt[j]).norm();
      break;
    case Alignment::kRoot: {
      const Vec3 pr = pred[static_cast<std::size_t>(root_index)];
      const Vec3 gr = gt[static_cast<std::size_t>(root_index)];
      for (std::size_t j = 0; j < pred.size(); ++j) {
        errors[j] = ((pred[j] - pr) - (gt[j] - gr)).norm();
      }
      break;
    }
    case Alignment::kProcrustes: {
      const auto aligned = procrustes_align(pred, gt);
      for (std::size_t j = 0; j < pred.size(); ++j) errors[j] = (aligned[j] - gt[j]).norm();
      break;
    }
  }
  return errors;
}

double mpjpe(std::span<const Vec3> pred, std::span<const Vec3> gt, Alignment alignment,
             int root_index) {
  const auto errors = joint_errors(pred, gt, alignment, root_index);
  double sum = 0.0;
  for (double e : errors) sum += e;
  return sum / static_cast<double>(errors.size());
}

double pck(std::span<const double> errors, double threshold_mm) {
  if (!(threshold_mm > 0.0)) throw InvalidInput("pck threshold must be positive");
  if (errors.empty()) return 0.0;
  const auto correct = std::count_if(errors.begin(), errors.end(),
                                     [&](double e) { return e <= threshold_mm; });
  return 100.0 * static_cast<double>(correct) / static_cast<double>(errors.size());
}

double auc(std::span<const double> errors, std::span<const double> thresholds_mm) {
  if (thresholds_mm.empty()) throw InvalidInput("auc needs at least one threshold");
  double sum = 0.0;
  for (double t : thresholds_mm) sum += pck(errors, t);
  return sum / static_cast<double>(thresholds_mm.size());
}

std::vector<double> threshold_grid(double lo_mm, double hi_mm, double step_mm) {
  if (!(lo_mm > 0.0) || !(hi_mm >= lo_mm) || !(step_mm > 0.0)) {
    throw InvalidInput("invalid threshold grid");
  }
  const auto count = static_cast<std::size_t>(std::floor((hi_mm - lo_mm) / step_mm + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo_mm + static_cast<double>(i) * step_mm;
  return grid;
}

ViolationCounts& ViolationCounts::operator+=(const ViolationCounts& other) {
  instance += other.instance;
  part += other.part;
  joint += other.joint;
  return *this;
}

ViolationCounts ordinal_violations(std::span<const AbsolutePose> pred_mm,
                                   std::span<const AbsolutePose> gt_mm,
                                   const SkeletonTopology& topology,
                                   std::span<const ViewVector> views,
                                   const HmorConfig& config) {
  if (pred_mm.size() != gt_mm.size()) {
    throw InvalidInput("violation audit needs index-matched scenes");
  }
  HmorConfig audit = config;
  audit.pair_cap.reset();
  const auto pred = to_loss_units(pred_mm, audit.depth_unit_scale);
  const auto gt = to_loss_units(gt_mm, audit.depth_unit_scale);
  ViolationCounts counts;
  auto count_level = [](const auto& gt_pairs, const auto& pred_pairs) {
    long long n = 0;
    for (std::size_t i = 0; i < gt_pairs.size(); ++i) {
      if (gt_pairs[i].label != pred_pairs[i].label) ++n;
    }
    return n;
  };
  for (const auto& view : views) {
    const auto gt_pairs = enumerate_pairs(gt, topology, view.direction(), audit);
    const auto pred_pairs = enumerate_pairs(pred, topology, view.direction(), audit);
    counts.instance += count_level(gt_pairs.instance, pred_pairs.instance);
    counts.part += count_level(gt_pairs.part, pred_pairs.part);
    counts.joint += count_level(gt_pairs.joint, pred_pairs.joint);
  }
  return counts;
}

ViolationCounts ordinal_violations(const Scene& pred, const Scene& gt,
                                   std::span<const ViewVector> views,
                                   const HmorConfig& config) {
  if (pred.topology != gt.topology) {
    throw InvalidInput("violation audit needs matching topologies");
  }
  return ordinal_violations(assemble_scene(pred), assemble_scene(gt), gt.topology, views,
                            config);
}

void MetricConfig::validate() const {
  if (!(pck_threshold_mm > 0.0)) throw InvalidInput("pck threshold must be positive");
  threshold_grid(auc_min_mm, auc_max_mm, auc_step_mm);
}

MetricReport evaluate(const Scene& pred, const Scene& gt, const MetricConfig& config,
                      std::span<const ViewVector> audit_views,
                      const HmorConfig& hmor_config) {
  config.validate();
  validate_scene(pred);
  validate_scene(gt);
  if (pred.topology != gt.topology) {
    throw InvalidInput("prediction and ground truth topologies differ");
  }
  const int root = gt.topology.root_index;
  const auto joints = static_cast<std::size_t>(gt.topology.joint_count);
  const auto assignment = match_persons(pred, gt, config.match_cost);
  const auto pred_poses = assemble_scene(pred);
  const auto gt_poses = assemble_scene(gt);

  MetricReport report;
  report.matched_pairs = assignment.matches;
  report.unmatched_pred = static_cast<int>(assignment.unmatched_pred.size());
  report.unmatched_gt = static_cast<int>(assignment.unmatched_gt.size());

  constexpr double kMissing = std::numeric_limits<double>::infinity();
  std::vector<double> rel_errors, abs_errors;
  double sum_rel = 0.0, sum_pa = 0.0, sum_abs = 0.0;
  std::vector<AbsolutePose> matched_pred, matched_gt;
  for (const auto& [p, g] : assignment.matches) {
    const auto& pp = pred_poses[static_cast<std::size_t>(p)];
    const auto& gp = gt_poses[static_cast<std::size_t>(g)];
    const auto rel = joint_errors(pp, gp, Alignment::kRoot, root);
    const auto pa = joint_errors(pp, gp, Alignment::kProcrustes, root);
    const auto ab = joint_errors(pp, gp, Alignment::kNone, root);
    for (std::size_t j = 0; j < joints; ++j) {
      sum_rel += rel[j];
      sum_pa += pa[j];
      sum_abs += ab[j];
    }
    rel_errors.insert(rel_errors.end(), rel.begin(), rel.end());
    abs_errors.insert(abs_errors.end(), ab.begin(), ab.end());
    matched_pred.push_back(pp);
    matched_gt.push_back(gp);
  }
  const auto matched_joints = static_cast<double>(assignment.matches.size() * joints);
  report.mpjpe = sum_rel / matched_joints;
  report.pa_mpjpe = sum_pa / matched_joints;
  report.abs_mpjpe = sum_abs / matched_joints;

  rel_errors.insert(rel_errors.end(), assignment.unmatched_gt.size() * joints, kMissing);
  abs_errors.insert(abs_errors.end(), assignment.unmatched_gt.size() * joints, kMissing);
  report.joint_count = static_cast<long long>(rel_errors.size());
  report.pck_rel = pck(rel_errors, config.pck_threshold_mm);
  report.pck_abs = pck(abs_errors, config.pck_threshold_mm);
  const auto grid = threshold_grid(config.auc_min_mm, config.auc_max_mm, config.auc_step_mm);
  report.auc_rel = auc(rel_errors, grid);
  report.pck_rel_curve.reserve(grid.size());
  for (double t : grid) report.pck_rel_curve.emplace_back(t, pck(rel_errors, t));

  std::vector<ViewVector> views(audit_views.begin(), audit_views.end());
  if (views.empty()) views.emplace_back(gt.camera.normal());
  report.ordinal_violations =
      ordinal_violations(matched_pred, matched_gt, gt.topology, views, hmor_config);
  return report;
}

}  // namespace hmor
