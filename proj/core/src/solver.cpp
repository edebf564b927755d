#include "hmor/solver.hpp"

#include "hmor/error.hpp"
#include "hmor/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>

namespace hmor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_finite(double value, const char* term) {
  if (!std::isfinite(value)) {
    throw NumericalError(term, std::string("objective term '") + term +
                                   "' is not finite");
  }
}

RelativePose normalized_rel(const Person& person, double focal, double scale) {
  RelativePose out = person.joints;
  for (auto& j : out) {
    j.u /= focal;
    j.v /= focal;
    j.z_rel *= scale;
  }
  return out;
}

std::vector<DepthEstimate> refine_estimates(const Scene& pred, const Scene& anchors) {
  std::vector<DepthEstimate> est;
  est.reserve(pred.persons.size());
  for (std::size_t m = 0; m < pred.persons.size(); ++m) {
    const auto& p = pred.persons[m];
    const double a_box = p.box.area();
    const double anchor_norm = normalize_depth(anchors.persons[m].root_depth, anchors.camera);
    const double pred_norm = normalize_depth(p.root_depth, pred.camera);
    const double z_eq_init = equivalent_depth(anchor_norm, a_box, p.roi_area);
    const double delta = equivalent_depth(pred_norm, a_box, p.roi_area) - z_eq_init;
    est.push_back({anchor_norm, z_eq_init, delta, a_box, p.roi_area});
  }
  return est;
}

std::vector<double> root_depths(const Scene& scene) {
  std::vector<double> z;
  z.reserve(scene.persons.size());
  for (const auto& p : scene.persons) z.push_back(p.root_depth);
  return z;
}

void require_matched(const Scene& pred, const Scene& other, const char* what) {
  if (pred.person_count() != other.person_count()) {
    throw InvalidInput(std::string(what) + " must have the same person count as the prediction");
  }
  if (pred.topology != other.topology) {
    throw InvalidInput(std::string(what) + " must share the prediction's topology");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (steps < 1) throw InvalidInput("solver steps must be at least 1");
  if (!(step_size > 0.0)) throw InvalidInput("solver step_size must be positive");
  if (views_per_step < 1) throw InvalidInput("views_per_step must be at least 1");
  if (max_halvings < 0) throw InvalidInput("max_halvings must be non-negative");
  if (!(divergence_limit > 0.0)) throw InvalidInput("divergence_limit must be positive");
  weights.validate();
  hmor.validate();
}

// ---------------------------------------------------------------------------

SceneParameterization::SceneParameterization(const Scene& base, FreeVariables mode,
                                             double depth_unit_scale)
    : base_(base), mode_(mode), scale_(depth_unit_scale), focal_(base.camera.mean_focal()) {
  validate_scene(base_);
}

std::size_t SceneParameterization::block_size() const noexcept {
  return mode_ == FreeVariables::kRootDepthsOnly
             ? 1
             : 3 * static_cast<std::size_t>(base_.topology.joint_count);
}

std::size_t SceneParameterization::size() const noexcept {
  return block_size() * base_.persons.size();
}

std::size_t SceneParameterization::root_index(int person) const noexcept {
  return block_size() * static_cast<std::size_t>(person);
}

std::vector<double> SceneParameterization::pack(const Scene& scene) const {
  std::vector<double> x;
  x.reserve(size());
  const int root = base_.topology.root_index;
  for (const auto& person : scene.persons) {
    x.push_back(person.root_depth * scale_);
    if (mode_ == FreeVariables::kFullPose) {
      for (int j = 0; j < base_.topology.joint_count; ++j) {
        const auto& joint = person.joints[static_cast<std::size_t>(j)];
        x.push_back(joint.u / focal_);
        x.push_back(joint.v / focal_);
        if (j != root) x.push_back(joint.z_rel * scale_);
      }
    }
  }
  return x;
}

Scene SceneParameterization::unpack(std::span<const double> x) const {
  if (x.size() != size()) throw InvalidInput("parameter vector has the wrong size");
  Scene scene = base_;
  const int root = base_.topology.root_index;
  std::size_t i = 0;
  for (auto& person : scene.persons) {
    person.root_depth = x[i++] / scale_;
    if (mode_ == FreeVariables::kFullPose) {
      for (int j = 0; j < base_.topology.joint_count; ++j) {
        auto& joint = person.joints[static_cast<std::size_t>(j)];
        joint.u = x[i++] * focal_;
        joint.v = x[i++] * focal_;
        if (j != root) joint.z_rel = x[i++] / scale_;
      }
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------

std::vector<ViewPairs> build_view_pairs(const Scene& gt, std::span<const ViewVector> views,
                                        const HmorConfig& config) {
  const auto poses = to_loss_units(assemble_scene(gt), config.depth_unit_scale);
  std::vector<ViewPairs> out;
  out.reserve(views.size());
  for (const auto& v : views) {
    out.push_back({v.direction(), enumerate_pairs(poses, gt.topology, v.direction(), config)});
  }
  return out;
}

ObjectiveResult objective(const Scene& pred, std::span<const ViewPairs> gt_pairs,
                          const Scene& anchors, const SolverConfig& config,
                          const SceneParameterization& params) {
  require_matched(pred, anchors, "anchors");
  const auto& w = config.weights;
  const double scale = config.hmor.depth_unit_scale;
  const Camera& cam = pred.camera;
  const double focal = cam.mean_focal();
  const auto n = static_cast<std::size_t>(pred.person_count());
  const auto joints = static_cast<std::size_t>(pred.topology.joint_count);
  const bool full = params.mode() == FreeVariables::kFullPose;

  const auto pred_m = to_loss_units(assemble_scene(pred), scale);

  ObjectiveResult result;
  std::vector<AbsolutePose> g_joint(n, AbsolutePose(joints, Vec3::Zero()));
  std::vector<double> g_root(n, 0.0);
  std::vector<RelativePose> g_rel(n, RelativePose(joints));

  if (w.pose > 0.0) {
    std::vector<RelativePose> p_rel, a_rel;
    for (std::size_t m = 0; m < n; ++m) {
      p_rel.push_back(normalized_rel(pred.persons[m], focal, scale));
      a_rel.push_back(normalized_rel(anchors.persons[m], focal, scale));
    }
    result.components.pose = loss_pose(p_rel, a_rel);
    check_finite(result.components.pose, "pose");
    if (full) {
      const auto g = loss_pose_grad(p_rel, a_rel);
      for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t j = 0; j < joints; ++j) {
          g_rel[m][j].u += w.pose * g[m][j].u;
          g_rel[m][j].v += w.pose * g[m][j].v;
          g_rel[m][j].z_rel += w.pose * g[m][j].z_rel;
        }
      }
    }
  }

  if (w.init > 0.0) {
    std::vector<double> pred_norm;
    for (const auto& p : pred.persons) pred_norm.push_back(normalize_depth(p.root_depth, cam));
    const auto anchor_z = root_depths(anchors);
    result.components.init = loss_init(pred_norm, anchor_z, anchors.camera);
    check_finite(result.components.init, "init");
    const auto g = loss_init_grad(pred_norm, anchor_z, anchors.camera);
    for (std::size_t m = 0; m < n; ++m) g_root[m] += w.init * g[m] / (scale * focal);
  }

  if (w.refine > 0.0) {
    const auto est = refine_estimates(pred, anchors);
    const auto anchor_z = root_depths(anchors);
    result.components.refine = loss_refine(est, anchor_z, anchors.camera);
    check_finite(result.components.refine, "refine");
    const auto g = loss_refine_grad(est, anchor_z, anchors.camera);
    for (std::size_t m = 0; m < n; ++m) {
      const double d_delta = std::sqrt(est[m].a_box / est[m].a_roi) / (scale * focal);
      g_root[m] += w.refine * g[m] * d_delta;
    }
  }

  if (w.abs > 0.0) {
    const auto anchor_m = to_loss_units(assemble_scene(anchors), scale);
    result.components.abs = loss_abs(pred_m, anchor_m);
    check_finite(result.components.abs, "abs");
    const auto g = loss_abs_grad(pred_m, anchor_m);
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t j = 0; j < joints; ++j) g_joint[m][j] += w.abs * g[m][j];
    }
  }

  if (w.hmor > 0.0 && !gt_pairs.empty()) {
    std::vector<AbsolutePose> g_hmor(n, AbsolutePose(joints, Vec3::Zero()));
    double sum = 0.0;
    for (const auto& vp : gt_pairs) {
      sum += hmor_loss(pred_m, pred.topology, vp.pairs, vp.view, config.hmor, &g_hmor).total;
    }
    const double inv_views = 1.0 / static_cast<double>(gt_pairs.size());
    result.components.hmor = sum * inv_views;
    check_finite(result.components.hmor, "hmor");
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t j = 0; j < joints; ++j) g_joint[m][j] += w.hmor * inv_views * g_hmor[m][j];
    }
  }

  result.value = total_loss(result.components, w);
  check_finite(result.value, "total");

  // Chain rule from camera-frame joints (loss units) to the free variables:
  // k = depth * ((U - cx) / fx, (V - cy) / fy, 1), depth = scale * (z_rel + z_R).
  result.gradient.assign(params.size(), 0.0);
  const int root = pred.topology.root_index;
  for (std::size_t m = 0; m < n; ++m) {
    const auto& person = pred.persons[m];
    std::size_t i = params.root_index(static_cast<int>(m));
    double& d_root = result.gradient[i++];
    d_root += g_root[m];
    for (std::size_t j = 0; j < joints; ++j) {
      const auto& joint = person.joints[j];
      const double big_u = joint.u + person.box.u_top;
      const double big_v = joint.v + person.box.v_top;
      const Vec3 ray((big_u - cam.cx()) / cam.fx(), (big_v - cam.cy()) / cam.fy(), 1.0);
      const double depth = scale * (joint.z_rel + person.root_depth);
      const Vec3& g = g_joint[m][j];
      const double along_ray = g.dot(ray);
      d_root += along_ray;
      if (full) {
        result.gradient[i++] += g.x() * depth * focal / cam.fx() + g_rel[m][j].u;
        result.gradient[i++] += g.y() * depth * focal / cam.fy() + g_rel[m][j].v;
        if (static_cast<int>(j) != root) result.gradient[i++] += along_ray + g_rel[m][j].z_rel;
      }
    }
  }
  return result;
}

double clamp_margin(const Scene& pred, std::span<const ViewPairs> gt_pairs,
                    const Scene& anchors, const SolverConfig& config) {
  const auto& w = config.weights;
  const double scale = config.hmor.depth_unit_scale;
  const double focal = pred.camera.mean_focal();
  const int root = pred.topology.root_index;
  double margin = kInf;
  auto take = [&](double v) { margin = std::min(margin, std::abs(v)); };

  const auto pred_m = to_loss_units(assemble_scene(pred), scale);
  if (w.hmor > 0.0) {
    const bool particle = config.hmor.part_representation == PartRepresentation::kParticle;
    std::vector<Vec3> positions;
    for (const auto& pose : pred_m) positions.push_back(instance_position(pose));
    auto at = [&](const ElementRef& r, int joint) -> const Vec3& {
      return pred_m[static_cast<std::size_t>(r.person)][static_cast<std::size_t>(joint)];
    };
    for (const auto& vp : gt_pairs) {
      if (config.hmor.w_instance > 0.0) {
        for (const auto& p : vp.pairs.instance) {
          if (p.label == RelationLabel::kTie) continue;
          take((positions[static_cast<std::size_t>(p.first)] -
                positions[static_cast<std::size_t>(p.second)]).dot(vp.view));
        }
      }
      if (config.hmor.w_part > 0.0) {
        for (const auto& p : vp.pairs.part) {
          if (p.label == RelationLabel::kTie) continue;
          const auto& e1 = pred.topology.parts[static_cast<std::size_t>(p.first.index)];
          const auto& e2 = pred.topology.parts[static_cast<std::size_t>(p.second.index)];
          if (particle) {
            take((0.5 * (at(p.first, e1.start) + at(p.first, e1.end)) -
                  0.5 * (at(p.second, e2.start) + at(p.second, e2.end))).dot(vp.view));
          } else {
            const Vec3 t1 = at(p.first, e1.end) - at(p.first, e1.start);
            const Vec3 t2 = at(p.second, e2.end) - at(p.second, e2.start);
            take(t1.cross(t2).dot(vp.view));
          }
        }
      }
      if (config.hmor.w_joint > 0.0) {
        for (const auto& p : vp.pairs.joint) {
          if (p.label == RelationLabel::kTie) continue;
          if (config.hmor.joint_clamp == JointClamp::kLabel && p.label == RelationLabel::kMinus) {
            continue;
          }
          take((at(p.first, p.first.index) - at(p.second, p.second.index)).dot(vp.view));
        }
      }
    }
  }
  for (std::size_t m = 0; m < pred.persons.size(); ++m) {
    const auto& p = pred.persons[m];
    const auto& a = anchors.persons[m];
    if (w.init > 0.0 || w.refine > 0.0) take((p.root_depth - a.root_depth) / focal);
    if (w.pose > 0.0 && config.free_variables == FreeVariables::kFullPose) {
      for (std::size_t j = 0; j < p.joints.size(); ++j) {
        take((p.joints[j].u - a.joints[j].u) / focal);
        take((p.joints[j].v - a.joints[j].v) / focal);
        if (static_cast<int>(j) != root) take((p.joints[j].z_rel - a.joints[j].z_rel) * scale);
      }
    }
  }
  if (w.abs > 0.0) {
    const auto anchor_m = to_loss_units(assemble_scene(anchors), scale);
    for (std::size_t m = 0; m < pred_m.size(); ++m) {
      for (std::size_t j = 0; j < pred_m[m].size(); ++j) {
        const Vec3 d = pred_m[m][j] - anchor_m[m][j];
        take(d.x());
        take(d.y());
        take(d.z());
      }
    }
  }
  return margin;
}

// ---------------------------------------------------------------------------

RefineResult refine(const Scene& pred, const Scene& gt, const SolverConfig& config) {
  return refine(pred, gt, pred, config);
}

RefineResult refine(const Scene& pred, const Scene& gt, const Scene& anchors,
                    const SolverConfig& config) {
  config.validate();
  validate_scene(pred);
  validate_scene(gt);
  validate_scene(anchors);
  require_matched(pred, gt, "ground truth");
  require_matched(pred, anchors, "anchors");

  const SceneParameterization params(pred, config.free_variables, config.hmor.depth_unit_scale);
  std::mt19937_64 rng(config.seed);
  const ViewVector normal(gt.camera.normal());
  const std::array<ViewVector, 1> audit_views{normal};
  const auto gt_mm = assemble_scene(gt);

  const bool resample = config.resample_views && !config.step_halving && config.views_per_step > 1;
  auto draw_views = [&] {
    std::vector<ViewVector> views{normal};
    for (int v = 1; v < config.views_per_step; ++v) views.push_back(sample_view(rng));
    return views;
  };
  std::vector<ViewPairs> pairs = build_view_pairs(gt, draw_views(), config.hmor);

  auto evaluate = [&](std::span<const double> x) {
    try {
      return objective(params.unpack(x), pairs, anchors, config, params);
    } catch (const InvalidDepth& e) {
      throw SolverError(std::string("iterate left the valid depth range: ") + e.what());
    }
  };
  auto violations = [&](std::span<const double> x) {
    return ordinal_violations(assemble_scene(params.unpack(x)), gt_mm, gt.topology,
                              audit_views, config.hmor);
  };
  auto check_divergence = [&](const ObjectiveResult& r, int step) {
    if (r.value > config.divergence_limit) {
      const auto& c = r.components;
      throw SolverError("objective diverged at step " + std::to_string(step) + ": value " +
                        std::to_string(r.value) + " (pose " + std::to_string(c.pose) +
                        ", init " + std::to_string(c.init) + ", refine " +
                        std::to_string(c.refine) + ", hmor " + std::to_string(c.hmor) +
                        ", abs " + std::to_string(c.abs) + ")");
    }
  };

  std::vector<double> x = params.pack(pred);
  ObjectiveResult current = evaluate(x);
  check_divergence(current, 0);

  std::vector<TraceRow> trace;
  trace.push_back({0, current.value, violations(x).total()});

  std::vector<double> trial(x.size());
  for (int step = 1; step <= config.steps; ++step) {
    if (resample && step > 1) {
      pairs = build_view_pairs(gt, draw_views(), config.hmor);
      current = evaluate(x);
    }
    double eta = config.step_size;
    auto take_step = [&] {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - eta * current.gradient[i];
    };
    take_step();
    if (config.step_halving) {
      std::optional<ObjectiveResult> next;
      for (int h = 0; h <= config.max_halvings; ++h) {
        try {
          auto candidate = evaluate(trial);
          if (candidate.value <= current.value) {
            next = std::move(candidate);
            break;
          }
        } catch (const SolverError&) {
          // Stepped out of the valid region; shrink and retry.
        }
        eta *= 0.5;
        take_step();
      }
      if (next) {
        x = trial;
        current = std::move(*next);
      }
    } else {
      x = trial;
      current = evaluate(x);
    }
    check_divergence(current, step);
    trace.push_back({step, current.value, violations(x).total()});
  }

  return RefineResult{params.unpack(x), std::move(trace), violations(x)};
}

// ---------------------------------------------------------------------------

double grad_check(const DifferentiableFunction& fn, std::span<const double> x,
                  double epsilon) {
  const auto analytic = fn.gradient(x);
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> numeric(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + epsilon;
    const double up = fn.value(probe);
    probe[i] = orig - epsilon;
    const double down = fn.value(probe);
    probe[i] = orig;
    numeric[i] = (up - down) / (2.0 * epsilon);
  }
  double max_diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale > 1e-12 ? max_diff / scale : max_diff;
}

std::string_view to_string(GradTerm term) {
  switch (term) {
    case GradTerm::kErrInstance: return "err_instance";
    case GradTerm::kErrPart: return "err_part";
    case GradTerm::kErrPartParticle: return "err_part_particle";
    case GradTerm::kErrJoint: return "err_joint";
    case GradTerm::kLossPose: return "loss_pose";
    case GradTerm::kLossInit: return "loss_init";
    case GradTerm::kLossRefine: return "loss_refine";
    case GradTerm::kLossAbs: return "loss_abs";
    case GradTerm::kObjective: return "objective";
  }
  return "unknown";
}

std::span<const GradTerm> all_grad_terms() {
  static constexpr std::array<GradTerm, 9> kTerms = {
      GradTerm::kErrInstance, GradTerm::kErrPart,   GradTerm::kErrPartParticle,
      GradTerm::kErrJoint,    GradTerm::kLossPose,  GradTerm::kLossInit,
      GradTerm::kLossRefine,  GradTerm::kLossAbs,   GradTerm::kObjective};
  return kTerms;
}

namespace {

Vec3 vec_at(std::span<const double> x, std::size_t offset) {
  return {x[offset], x[offset + 1], x[offset + 2]};
}

using PairGradFn = PairGradient (*)(const Vec3&, const Vec3&, RelationLabel, const Vec3&);

GradProblem pair_problem(PairGradFn fn, bool cross, std::mt19937_64& rng, double epsilon) {
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  const double min_margin = 10.0 * epsilon;
  for (;;) {
    const Vec3 view = sample_view(rng).direction();
    std::vector<double> x(6);
    for (auto& v : x) v = coord(rng);
    const Vec3 a = vec_at(x, 0);
    const Vec3 b = vec_at(x, 3);
    const double arg = cross ? a.cross(b).dot(view) : (a - b).dot(view);
    if (std::abs(arg) <= min_margin) continue;
    // Label that makes the current ordering wrong, so the clamp is active.
    const RelationLabel label = arg > 0.0 ? RelationLabel::kPlus : RelationLabel::kMinus;
    GradProblem problem;
    problem.point = x;
    problem.margin = std::abs(arg);
    problem.fn.value = [fn, label, view](std::span<const double> p) {
      return fn(vec_at(p, 0), vec_at(p, 3), label, view).value;
    };
    problem.fn.gradient = [fn, label, view](std::span<const double> p) {
      const auto g = fn(vec_at(p, 0), vec_at(p, 3), label, view);
      return std::vector<double>{g.d_first.x(), g.d_first.y(), g.d_first.z(),
                                 g.d_second.x(), g.d_second.y(), g.d_second.z()};
    };
    return problem;
  }
}

PairGradient joint_grad_product(const Vec3& a, const Vec3& b, RelationLabel l, const Vec3& v) {
  return err_joint_grad(a, b, l, v, JointClamp::kProduct);
}

// Draws `count` values whose distance to the paired reference exceeds the margin.
std::vector<double> offset_values(std::span<const double> reference, double spread,
                                  double min_margin, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> offset(-spread, spread);
  std::vector<double> out(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) {
    double d = 0.0;
    do {
      d = offset(rng);
    } while (std::abs(d) <= min_margin);
    out[i] = reference[i] + d;
  }
  return out;
}

GradProblem objective_problem(std::mt19937_64& rng, double epsilon) {
  std::uniform_int_distribution<int> persons(2, 3);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (;;) {
    GenSpec spec;
    spec.seed = rng();
    spec.n_persons = persons(rng);
    const Scene gt = generate_scene(spec);
    spec.perturbation = GaussPerturbation{30.0, 300.0};
    const Scene pred = perturb(gt, spec);
    Scene anchors = pred;
    for (auto& p : anchors.persons) {
      p.root_depth += 100.0 * unit(rng);
      for (std::size_t j = 0; j < p.joints.size(); ++j) {
        p.joints[j].u += 2.0 * unit(rng);
        p.joints[j].v += 2.0 * unit(rng);
        if (static_cast<int>(j) != gt.topology.root_index) p.joints[j].z_rel += 20.0 * unit(rng);
      }
    }
    SolverConfig config;
    config.free_variables = FreeVariables::kFullPose;
    config.weights.abs = 1.0;
    std::mt19937_64 view_rng(spec.seed);
    std::vector<ViewVector> views{ViewVector::camera_normal(), sample_view(view_rng),
                                  sample_view(view_rng)};
    auto pairs = build_view_pairs(gt, views, config.hmor);
    const double margin = clamp_margin(pred, pairs, anchors, config);
    if (margin <= 10.0 * epsilon) continue;

    auto params = std::make_shared<SceneParameterization>(pred, config.free_variables,
                                                          config.hmor.depth_unit_scale);
    auto shared_pairs = std::make_shared<std::vector<ViewPairs>>(std::move(pairs));
    auto shared_anchors = std::make_shared<Scene>(anchors);
    GradProblem problem;
    problem.point = params->pack(pred);
    problem.margin = margin;
    problem.fn.value = [=](std::span<const double> x) {
      return objective(params->unpack(x), *shared_pairs, *shared_anchors, config, *params).value;
    };
    problem.fn.gradient = [=](std::span<const double> x) {
      return objective(params->unpack(x), *shared_pairs, *shared_anchors, config, *params)
          .gradient;
    };
    return problem;
  }
}

}  // namespace

GradProblem random_grad_problem(GradTerm term, std::mt19937_64& rng, double epsilon) {
  const double min_margin = 10.0 * epsilon;
  std::uniform_int_distribution<int> person_count(1, 3);
  switch (term) {
    case GradTerm::kErrInstance:
      return pair_problem(&err_instance_grad, false, rng, epsilon);
    case GradTerm::kErrPart:
      return pair_problem(&err_part_grad, true, rng, epsilon);
    case GradTerm::kErrPartParticle:
      return pair_problem(&err_part_particle_grad, false, rng, epsilon);
    case GradTerm::kErrJoint:
      return pair_problem(&joint_grad_product, false, rng, epsilon);
    case GradTerm::kLossPose: {
      const int n = person_count(rng);
      const int joints = 17;
      std::uniform_real_distribution<double> coord(-100.0, 100.0);
      std::vector<double> gt_flat(static_cast<std::size_t>(n * joints * 3));
      for (auto& v : gt_flat) v = coord(rng);
      auto unflatten = [n, joints](std::span<const double> f) {
        std::vector<RelativePose> poses(static_cast<std::size_t>(n), RelativePose(joints));
        for (int m = 0; m < n; ++m) {
          for (int j = 0; j < joints; ++j) {
            const auto i = static_cast<std::size_t>((m * joints + j) * 3);
            poses[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] = {f[i], f[i + 1], f[i + 2]};
          }
        }
        return poses;
      };
      const auto gt = unflatten(gt_flat);
      GradProblem problem;
      problem.point = offset_values(gt_flat, 5.0, min_margin, rng);
      problem.margin = min_margin;
      problem.fn.value = [=](std::span<const double> x) { return loss_pose(unflatten(x), gt); };
      problem.fn.gradient = [=](std::span<const double> x) {
        const auto g = loss_pose_grad(unflatten(x), gt);
        std::vector<double> out;
        for (const auto& pose : g) {
          for (const auto& j : pose) out.insert(out.end(), {j.u, j.v, j.z_rel});
        }
        return out;
      };
      return problem;
    }
    case GradTerm::kLossInit:
    case GradTerm::kLossRefine: {
      const int n = person_count(rng);
      std::uniform_real_distribution<double> depth(2000.0, 8000.0);
      std::uniform_real_distribution<double> focal(500.0, 1500.0);
      std::uniform_real_distribution<double> area(1e4, 1e5);
      const Camera camera(focal(rng), focal(rng), 640.0, 360.0);
      std::vector<double> gt_z(static_cast<std::size_t>(n));
      for (auto& z : gt_z) z = depth(rng);
      GradProblem problem;
      problem.margin = min_margin;
      if (term == GradTerm::kLossInit) {
        std::vector<double> gt_norm;
        for (double z : gt_z) gt_norm.push_back(normalize_depth(z, camera));
        problem.point = offset_values(gt_norm, 1.0, min_margin, rng);
        problem.fn.value = [=](std::span<const double> x) { return loss_init(x, gt_z, camera); };
        problem.fn.gradient = [=](std::span<const double> x) {
          return loss_init_grad(x, gt_z, camera);
        };
      } else {
        std::vector<double> box(gt_z.size()), roi(gt_z.size()), z_init(gt_z.size());
        std::vector<double> exact_delta(gt_z.size());
        std::normal_distribution<double> init_noise(0.0, 0.5);
        for (std::size_t m = 0; m < gt_z.size(); ++m) {
          box[m] = area(rng);
          roi[m] = area(rng);
          z_init[m] = normalize_depth(gt_z[m], camera) + init_noise(rng);
          exact_delta[m] = equivalent_depth(normalize_depth(gt_z[m], camera), box[m], roi[m]) -
                           equivalent_depth(z_init[m], box[m], roi[m]);
        }
        auto estimates = [=](std::span<const double> deltas) {
          std::vector<DepthEstimate> est;
          for (std::size_t m = 0; m < deltas.size(); ++m) {
            est.push_back(make_depth_estimate(z_init[m], deltas[m], box[m], roi[m]));
          }
          return est;
        };
        problem.point = offset_values(exact_delta, 1.0, min_margin, rng);
        problem.fn.value = [=](std::span<const double> x) {
          return loss_refine(estimates(x), gt_z, camera);
        };
        problem.fn.gradient = [=](std::span<const double> x) {
          return loss_refine_grad(estimates(x), gt_z, camera);
        };
      }
      return problem;
    }
    case GradTerm::kLossAbs: {
      const int n = person_count(rng);
      const int joints = 17;
      std::uniform_real_distribution<double> coord(-3.0, 3.0);
      std::vector<double> gt_flat(static_cast<std::size_t>(n * joints * 3));
      for (auto& v : gt_flat) v = coord(rng);
      auto unflatten = [n, joints](std::span<const double> f) {
        std::vector<AbsolutePose> poses(static_cast<std::size_t>(n), AbsolutePose(joints));
        for (int m = 0; m < n; ++m) {
          for (int j = 0; j < joints; ++j) {
            const auto i = static_cast<std::size_t>((m * joints + j) * 3);
            poses[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] = vec_at(f, i);
          }
        }
        return poses;
      };
      const auto gt = unflatten(gt_flat);
      GradProblem problem;
      problem.point = offset_values(gt_flat, 0.5, min_margin, rng);
      problem.margin = min_margin;
      problem.fn.value = [=](std::span<const double> x) { return loss_abs(unflatten(x), gt); };
      problem.fn.gradient = [=](std::span<const double> x) {
        const auto g = loss_abs_grad(unflatten(x), gt);
        std::vector<double> out;
        for (const auto& pose : g) {
          for (const auto& k : pose) out.insert(out.end(), {k.x(), k.y(), k.z()});
        }
        return out;
      };
      return problem;
    }
    case GradTerm::kObjective:
      return objective_problem(rng, epsilon);
  }
  throw InvalidInput("unknown gradient term");
}

double grad_check(const Scene& pred, const Scene& gt, const Scene& anchors,
                  const SolverConfig& config, double epsilon) {
  config.validate();
  require_matched(pred, gt, "ground truth");
  const SceneParameterization params(pred, config.free_variables, config.hmor.depth_unit_scale);
  std::mt19937_64 rng(config.seed);
  std::vector<ViewVector> views{ViewVector(gt.camera.normal())};
  for (int v = 1; v < config.views_per_step; ++v) views.push_back(sample_view(rng));
  const auto pairs = build_view_pairs(gt, views, config.hmor);
  DifferentiableFunction fn{
      [&](std::span<const double> x) {
        return objective(params.unpack(x), pairs, anchors, config, params).value;
      },
      [&](std::span<const double> x) {
        return objective(params.unpack(x), pairs, anchors, config, params).gradient;
      }};
  return grad_check(fn, params.pack(pred), epsilon);
}

}  // namespace hmor
