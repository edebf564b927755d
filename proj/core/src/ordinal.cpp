#include "hmor/ordinal.hpp"

#include "hmor/error.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>

namespace hmor {

namespace {

RelationLabel depth_label(double signed_gap, double tolerance) {
  if (signed_gap < -tolerance) return RelationLabel::kPlus;
  if (signed_gap > tolerance) return RelationLabel::kMinus;
  return RelationLabel::kTie;
}

// log(1 + max(0, label * gap)) where gap = (first - second) . view.
PairGradient log_hinge_grad(const Vec3& first, const Vec3& second, int label,
                            const Vec3& view) {
  PairGradient out;
  if (label == 0) return out;
  const double x = label * (first - second).dot(view);
  if (!(x > 0.0)) return out;
  out.value = std::log1p(x);
  out.d_first = (label / (1.0 + x)) * view;
  out.d_second = -out.d_first;
  return out;
}

Vec3 midpoint(std::span<const Vec3> pose, const PartEdge& edge) {
  return 0.5 * (pose[static_cast<std::size_t>(edge.start)] +
                pose[static_cast<std::size_t>(edge.end)]);
}

template <typename Pair>
void subsample(std::vector<Pair>& pairs, std::size_t cap, std::uint64_t seed) {
  if (pairs.size() <= cap) return;
  std::vector<Pair> kept;
  kept.reserve(cap);
  std::mt19937_64 rng(seed);
  std::sample(pairs.begin(), pairs.end(), std::back_inserter(kept), cap, rng);
  pairs = std::move(kept);
}

template <typename T>
double mean_or_zero(double sum, const std::vector<T>& items) {
  return items.empty() ? 0.0 : sum / static_cast<double>(items.size());
}

}  // namespace

void HmorConfig::validate() const {
  if (!(depth_unit_scale > 0.0)) {
    throw InvalidInput("hmor depth_unit_scale must be positive");
  }
  if (!(equality_tolerance >= 0.0)) {
    throw InvalidInput("hmor equality_tolerance must be non-negative");
  }
  if (!(w_instance >= 0.0) || !(w_part >= 0.0) || !(w_joint >= 0.0)) {
    throw InvalidInput("hmor level weights must be non-negative");
  }
  if (pair_cap && *pair_cap == 0) {
    throw InvalidInput("hmor pair_cap must be positive when set");
  }
}

RelationLabel relation_instance(const Vec3& a, const Vec3& b, const Vec3& view,
                                double tolerance) {
  return depth_label((a - b).dot(view), tolerance);
}

double err_instance(const Vec3& pred_a, const Vec3& pred_b, RelationLabel label,
                    const Vec3& view) {
  return std::log1p(std::max(0.0, value(label) * (pred_a - pred_b).dot(view)));
}

RelationLabel relation_part(const Vec3& t1, const Vec3& t2, const Vec3& view,
                            double tolerance) {
  const double c = t1.cross(t2).dot(view);
  if (c > tolerance) return RelationLabel::kMinus;
  if (c < -tolerance) return RelationLabel::kPlus;
  return RelationLabel::kTie;
}

double err_part(const Vec3& pred_t1, const Vec3& pred_t2, RelationLabel label,
                const Vec3& view) {
  return std::max(0.0, value(label) * pred_t1.cross(pred_t2).dot(view));
}

double err_part_particle(const Vec3& pred_c1, const Vec3& pred_c2,
                         RelationLabel label, const Vec3& view) {
  return err_instance(pred_c1, pred_c2, label, view);
}

RelationLabel relation_joint(const Vec3& k1, const Vec3& k2, const Vec3& view,
                             double tolerance) {
  return depth_label((k1 - k2).dot(view), tolerance);
}

double err_joint(const Vec3& pred_k1, const Vec3& pred_k2, RelationLabel label,
                 const Vec3& view, JointClamp clamp) {
  const int l = clamp == JointClamp::kLabel ? std::max(0, value(label)) : value(label);
  return std::log1p(std::max(0.0, l * (pred_k1 - pred_k2).dot(view)));
}

PairGradient err_instance_grad(const Vec3& pred_a, const Vec3& pred_b,
                               RelationLabel label, const Vec3& view) {
  return log_hinge_grad(pred_a, pred_b, value(label), view);
}

PairGradient err_part_grad(const Vec3& pred_t1, const Vec3& pred_t2,
                           RelationLabel label, const Vec3& view) {
  PairGradient out;
  const int l = value(label);
  if (l == 0) return out;
  const double x = l * pred_t1.cross(pred_t2).dot(view);
  if (!(x > 0.0)) return out;
  out.value = x;
  // (t1 x t2) . n = t1 . (t2 x n) = t2 . (n x t1)
  out.d_first = l * pred_t2.cross(view);
  out.d_second = l * view.cross(pred_t1);
  return out;
}

PairGradient err_part_particle_grad(const Vec3& pred_c1, const Vec3& pred_c2,
                                    RelationLabel label, const Vec3& view) {
  return log_hinge_grad(pred_c1, pred_c2, value(label), view);
}

PairGradient err_joint_grad(const Vec3& pred_k1, const Vec3& pred_k2,
                            RelationLabel label, const Vec3& view, JointClamp clamp) {
  const int l = clamp == JointClamp::kLabel ? std::max(0, value(label)) : value(label);
  return log_hinge_grad(pred_k1, pred_k2, l, view);
}

std::vector<AbsolutePose> to_loss_units(std::span<const AbsolutePose> poses_mm,
                                        double depth_unit_scale) {
  std::vector<AbsolutePose> out(poses_mm.begin(), poses_mm.end());
  for (auto& pose : out) {
    for (auto& joint : pose) joint *= depth_unit_scale;
  }
  return out;
}

RelationPairs enumerate_pairs(std::span<const AbsolutePose> poses,
                              const SkeletonTopology& topology, const Vec3& view,
                              const HmorConfig& config) {
  const double tol = config.equality_tolerance;
  const int n = static_cast<int>(poses.size());
  const int s_count = topology.part_count();
  const int j_count = topology.joint_count;
  RelationPairs pairs;

  std::vector<Vec3> positions;
  positions.reserve(poses.size());
  for (const auto& pose : poses) positions.push_back(instance_position(pose));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      pairs.instance.push_back(
          {a, b, relation_instance(positions[a], positions[b], view, tol)});
    }
  }

  // Flattened part elements: vector or midpoint per (person, part).
  const bool particle = config.part_representation == PartRepresentation::kParticle;
  std::vector<Vec3> part_elems;
  part_elems.reserve(static_cast<std::size_t>(n * s_count));
  for (const auto& pose : poses) {
    if (particle) {
      for (const auto& edge : topology.parts) part_elems.push_back(midpoint(pose, edge));
    } else {
      auto parts = part_vectors(pose, topology);
      part_elems.insert(part_elems.end(), parts.begin(), parts.end());
    }
  }
  const int part_total = n * s_count;
  for (int f1 = 0; f1 < part_total; ++f1) {
    for (int f2 = f1 + 1; f2 < part_total; ++f2) {
      const auto& e1 = part_elems[static_cast<std::size_t>(f1)];
      const auto& e2 = part_elems[static_cast<std::size_t>(f2)];
      const RelationLabel label = particle ? relation_instance(e1, e2, view, tol)
                                          : relation_part(e1, e2, view, tol);
      pairs.part.push_back({{f1 / s_count, f1 % s_count}, {f2 / s_count, f2 % s_count}, label});
    }
  }

  const bool intra_only = config.joint_scope == JointPairScope::kIntraPerson;
  const int joint_total = n * j_count;
  for (int f1 = 0; f1 < joint_total; ++f1) {
    const int p1 = f1 / j_count;
    const auto& k1 = poses[static_cast<std::size_t>(p1)][static_cast<std::size_t>(f1 % j_count)];
    for (int f2 = f1 + 1; f2 < joint_total; ++f2) {
      const int p2 = f2 / j_count;
      if (intra_only && p1 != p2) break;
      const auto& k2 = poses[static_cast<std::size_t>(p2)][static_cast<std::size_t>(f2 % j_count)];
      pairs.joint.push_back({{p1, f1 % j_count}, {p2, f2 % j_count},
                             relation_joint(k1, k2, view, tol)});
    }
  }

  if (config.pair_cap) {
    subsample(pairs.instance, *config.pair_cap, config.pair_seed);
    subsample(pairs.part, *config.pair_cap, config.pair_seed + 1);
    subsample(pairs.joint, *config.pair_cap, config.pair_seed + 2);
  }
  return pairs;
}

RelationPairs enumerate_pairs(const Scene& gt_scene, const ViewVector& view,
                              const HmorConfig& config) {
  config.validate();
  validate_scene(gt_scene);
  const auto poses = to_loss_units(assemble_scene(gt_scene), config.depth_unit_scale);
  return enumerate_pairs(poses, gt_scene.topology, view.direction(), config);
}

HmorLoss hmor_loss(std::span<const AbsolutePose> pred,
                   const SkeletonTopology& topology, const RelationPairs& pairs,
                   const Vec3& view, const HmorConfig& config,
                   std::vector<AbsolutePose>* gradient) {
  HmorLoss loss;
  auto joint_at = [&](int person, int joint) -> const Vec3& {
    return pred[static_cast<std::size_t>(person)][static_cast<std::size_t>(joint)];
  };
  auto grad_at = [&](int person, int joint) -> Vec3& {
    return (*gradient)[static_cast<std::size_t>(person)][static_cast<std::size_t>(joint)];
  };

  // Instance level.
  if (!pairs.instance.empty()) {
    std::vector<Vec3> positions;
    positions.reserve(pred.size());
    for (const auto& pose : pred) positions.push_back(instance_position(pose));
    const double scale = config.w_instance / static_cast<double>(pairs.instance.size());
    double sum = 0.0;
    for (const auto& pair : pairs.instance) {
      const auto g = err_instance_grad(positions[static_cast<std::size_t>(pair.first)],
                                       positions[static_cast<std::size_t>(pair.second)],
                                       pair.label, view);
      sum += g.value;
      if (gradient != nullptr && g.value > 0.0) {
        const auto& pa = pred[static_cast<std::size_t>(pair.first)];
        const auto& pb = pred[static_cast<std::size_t>(pair.second)];
        const Vec3 da = g.d_first * (scale / static_cast<double>(pa.size()));
        const Vec3 db = g.d_second * (scale / static_cast<double>(pb.size()));
        for (std::size_t j = 0; j < pa.size(); ++j) grad_at(pair.first, static_cast<int>(j)) += da;
        for (std::size_t j = 0; j < pb.size(); ++j) grad_at(pair.second, static_cast<int>(j)) += db;
      }
    }
    loss.instance = mean_or_zero(sum, pairs.instance);
  }

  // Part level.
  if (!pairs.part.empty()) {
    const bool particle = config.part_representation == PartRepresentation::kParticle;
    const double scale = config.w_part / static_cast<double>(pairs.part.size());
    double sum = 0.0;
    for (const auto& pair : pairs.part) {
      const auto& e1 = topology.parts[static_cast<std::size_t>(pair.first.index)];
      const auto& e2 = topology.parts[static_cast<std::size_t>(pair.second.index)];
      const Vec3& s1 = joint_at(pair.first.person, e1.start);
      const Vec3& t1 = joint_at(pair.first.person, e1.end);
      const Vec3& s2 = joint_at(pair.second.person, e2.start);
      const Vec3& t2 = joint_at(pair.second.person, e2.end);
      PairGradient g;
      double start_coeff = 0.0;
      double end_coeff = 0.0;
      if (particle) {
        g = err_part_particle_grad(0.5 * (s1 + t1), 0.5 * (s2 + t2), pair.label, view);
        start_coeff = 0.5;
        end_coeff = 0.5;
      } else {
        g = err_part_grad(t1 - s1, t2 - s2, pair.label, view);
        start_coeff = -1.0;
        end_coeff = 1.0;
      }
      sum += g.value;
      if (gradient != nullptr && g.value > 0.0) {
        grad_at(pair.first.person, e1.start) += scale * start_coeff * g.d_first;
        grad_at(pair.first.person, e1.end) += scale * end_coeff * g.d_first;
        grad_at(pair.second.person, e2.start) += scale * start_coeff * g.d_second;
        grad_at(pair.second.person, e2.end) += scale * end_coeff * g.d_second;
      }
    }
    loss.part = mean_or_zero(sum, pairs.part);
  }

  // Joint level.
  if (!pairs.joint.empty()) {
    const double scale = config.w_joint / static_cast<double>(pairs.joint.size());
    double sum = 0.0;
    for (const auto& pair : pairs.joint) {
      const auto g = err_joint_grad(joint_at(pair.first.person, pair.first.index),
                                    joint_at(pair.second.person, pair.second.index),
                                    pair.label, view, config.joint_clamp);
      sum += g.value;
      if (gradient != nullptr && g.value > 0.0) {
        grad_at(pair.first.person, pair.first.index) += scale * g.d_first;
        grad_at(pair.second.person, pair.second.index) += scale * g.d_second;
      }
    }
    loss.joint = mean_or_zero(sum, pairs.joint);
  }

  loss.total = config.w_instance * loss.instance + config.w_part * loss.part +
               config.w_joint * loss.joint;
  return loss;
}

HmorLoss hmor_loss(const Scene& pred_scene, const RelationPairs& pairs,
                   const ViewVector& view, const HmorConfig& config) {
  config.validate();
  validate_scene(pred_scene);
  const auto poses = to_loss_units(assemble_scene(pred_scene), config.depth_unit_scale);
  return hmor_loss(poses, pred_scene.topology, pairs, view.direction(), config);
}

std::vector<ElementPair> part_relations_from_2d(
    std::span<const std::vector<Vec2>> pixels, const SkeletonTopology& topology,
    double tolerance) {
  const Vec3 view = Vec3::UnitZ();
  const int s_count = topology.part_count();
  std::vector<Vec3> planar;
  planar.reserve(pixels.size() * static_cast<std::size_t>(s_count));
  for (const auto& joints : pixels) {
    if (static_cast<int>(joints.size()) != topology.joint_count) {
      throw InvalidInput("2D pose joint count does not match topology");
    }
    for (const auto& edge : topology.parts) {
      const Vec2 d = joints[static_cast<std::size_t>(edge.end)] -
                     joints[static_cast<std::size_t>(edge.start)];
      planar.emplace_back(d.x(), d.y(), 0.0);
    }
  }
  std::vector<ElementPair> pairs;
  const int total = static_cast<int>(planar.size());
  for (int f1 = 0; f1 < total; ++f1) {
    for (int f2 = f1 + 1; f2 < total; ++f2) {
      pairs.push_back({{f1 / s_count, f1 % s_count},
                       {f2 / s_count, f2 % s_count},
                       relation_part(planar[static_cast<std::size_t>(f1)],
                                     planar[static_cast<std::size_t>(f2)], view,
                                     tolerance)});
    }
  }
  return pairs;
}

}  // namespace hmor
