#include "hmor_cli/run_config.hpp"

#include "hmor/error.hpp"
#include "hmor_cli/scene_file.hpp"

#include <initializer_list>
#include <type_traits>
#include <vector>
#include <string>
#include <string_view>
#include <utility>

namespace hmor::cli {

namespace {

using json = nlohmann::json;

// Walks one JSON object, rejecting keys that no handler consumed.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw InvalidInput("config '" + path_ + "' must be an object");
  }

  void done() const {
    for (const auto& [key, value] : node_.items()) {
      bool seen = false;
      for (const auto& k : consumed_) seen = seen || k == key;
      if (!seen) throw InvalidInput("unknown config key '" + where(key) + "'");
    }
  }

  const json* find(const std::string& key) {
    consumed_.push_back(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (const json* v = find(key)) {
      try {
        if constexpr (std::is_same_v<T, bool>) {
          if (!v->is_boolean()) throw InvalidInput("");
        } else if constexpr (std::is_integral_v<T>) {
          if (!v->is_number_integer()) throw InvalidInput("");
        } else if constexpr (std::is_floating_point_v<T>) {
          if (!v->is_number()) throw InvalidInput("");
        } else {
          if (!v->is_string()) throw InvalidInput("");
        }
        out = v->get<T>();
      } catch (const std::exception&) {
        throw InvalidInput("config key '" + where(key) + "' has the wrong type");
      }
    }
  }

  template <typename E>
  void get_enum(const std::string& key, E& out,
                std::initializer_list<std::pair<std::string_view, E>> names) {
    if (find(key) == nullptr) return;
    std::string text;
    get(key, text);
    for (const auto& [name, value] : names) {
      if (text == name) {
        out = value;
        return;
      }
    }
    throw InvalidInput("config key '" + where(key) + "' has unknown value '" + text + "'");
  }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& node_;
  std::string path_;
  std::vector<std::string> consumed_;
};

void read_hmor(const json& node, HmorConfig& c) {
  Section s(node, "hmor");
  s.get("depth_unit_scale", c.depth_unit_scale);
  s.get("equality_tolerance", c.equality_tolerance);
  s.get("w_instance", c.w_instance);
  s.get("w_part", c.w_part);
  s.get("w_joint", c.w_joint);
  if (const json* cap = s.find("pair_cap")) {
    if (cap->is_null()) {
      c.pair_cap.reset();
    } else if (cap->is_number_unsigned()) {
      c.pair_cap = cap->get<std::size_t>();
    } else {
      throw InvalidInput("config key 'hmor.pair_cap' must be a non-negative integer or null");
    }
  }
  s.get("pair_seed", c.pair_seed);
  s.get_enum("part_representation", c.part_representation,
             {{"vector", PartRepresentation::kVector}, {"particle", PartRepresentation::kParticle}});
  s.get_enum("joint_clamp", c.joint_clamp,
             {{"product", JointClamp::kProduct}, {"label", JointClamp::kLabel}});
  s.get_enum("joint_scope", c.joint_scope,
             {{"all", JointPairScope::kAll}, {"intra_person", JointPairScope::kIntraPerson}});
  s.done();
}

void read_weights(const json& node, LossWeights& w) {
  Section s(node, "weights");
  s.get("pose", w.pose);
  s.get("init", w.init);
  s.get("refine", w.refine);
  s.get("hmor", w.hmor);
  s.get("abs", w.abs);
  s.done();
}

void read_solver(const json& node, SolverConfig& c) {
  Section s(node, "solver");
  s.get("steps", c.steps);
  s.get("step_size", c.step_size);
  s.get("views_per_step", c.views_per_step);
  s.get("resample_views", c.resample_views);
  s.get("step_halving", c.step_halving);
  s.get("max_halvings", c.max_halvings);
  s.get_enum("free_variables", c.free_variables,
             {{"root_depths", FreeVariables::kRootDepthsOnly},
              {"full_pose", FreeVariables::kFullPose}});
  s.get("divergence_limit", c.divergence_limit);
  s.done();
}

Camera read_camera(const json& node, const Camera& fallback) {
  Section s(node, "gen.camera");
  double fx = fallback.fx(), fy = fallback.fy(), cx = fallback.cx(), cy = fallback.cy();
  s.get("fx", fx);
  s.get("fy", fy);
  s.get("cx", cx);
  s.get("cy", cy);
  s.done();
  return Camera(fx, fy, cx, cy);
}

Perturbation read_perturbation(const json& node) {
  Section s(node, "gen.perturbation");
  std::string type = "none";
  s.get("type", type);
  if (type == "none") {
    s.done();
    return NoPerturbation{};
  }
  if (type == "gauss") {
    GaussPerturbation g;
    s.get("sigma_xy_mm", g.sigma_xy);
    s.get("sigma_z_mm", g.sigma_z);
    s.done();
    return g;
  }
  if (type == "swap") {
    DepthSwap swap;
    if (const json* pairs = s.find("pairs")) {
      if (!pairs->is_array()) throw InvalidInput("config key 'gen.perturbation.pairs' must be an array");
      for (const auto& p : *pairs) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
            !p[1].is_number_integer()) {
          throw InvalidInput("config key 'gen.perturbation.pairs' must hold [a, b] integer pairs");
        }
        swap.pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
      }
    }
    s.done();
    return swap;
  }
  if (type == "offset") {
    RootOffset offset;
    s.get("offset_mm", offset.offset_mm);
    s.done();
    return offset;
  }
  throw InvalidInput("config key 'gen.perturbation.type' has unknown value '" + type + "'");
}

void read_gen(const json& node, RunConfig& c) {
  Section s(node, "gen");
  s.get("persons", c.gen.n_persons);
  s.get("count", c.gen_count);
  s.get("depth_min_mm", c.gen.depth_min);
  s.get("depth_max_mm", c.gen.depth_max);
  s.get("lateral_range_mm", c.gen.lateral_range);
  s.get("bone_scale_mm", c.gen.bone_scale);
  if (const json* cam = s.find("camera")) c.gen.camera = read_camera(*cam, c.gen.camera);
  if (const json* frame = s.find("frame")) {
    Section f(*frame, "gen.frame");
    f.get("width", c.gen.frame.width);
    f.get("height", c.gen.frame.height);
    f.done();
  }
  if (const json* p = s.find("perturbation")) c.gen.perturbation = read_perturbation(*p);
  s.done();
}

void read_eval(const json& node, EvalSettings& e) {
  Section s(node, "eval");
  s.get("pck_threshold_mm", e.metrics.pck_threshold_mm);
  s.get("auc_min_mm", e.metrics.auc_min_mm);
  s.get("auc_max_mm", e.metrics.auc_max_mm);
  s.get("auc_step_mm", e.metrics.auc_step_mm);
  s.get_enum("match_cost", e.metrics.match_cost,
             {{"root_aligned_3d", MatchCost::kRootAligned3d},
              {"projection_2d", MatchCost::kProjection2d}});
  s.get("audit_views", e.audit_views);
  s.done();
}

void read_gradcheck(const json& node, GradCheckSettings& g) {
  Section s(node, "gradcheck");
  s.get("points", g.points);
  s.get("epsilon", g.epsilon);
  s.get("tolerance", g.tolerance);
  s.done();
}

}  // namespace

void RunConfig::validate() const {
  gen.validate();
  if (gen_count < 1) throw InvalidInput("gen.count must be at least 1");
  solver.validate();
  eval.metrics.validate();
  if (eval.audit_views < 1) throw InvalidInput("eval.audit_views must be at least 1");
  if (gradcheck.points < 1) throw InvalidInput("gradcheck.points must be at least 1");
  if (!(gradcheck.epsilon > 0.0)) throw InvalidInput("gradcheck.epsilon must be positive");
  if (!(gradcheck.tolerance > 0.0)) throw InvalidInput("gradcheck.tolerance must be positive");
}

RunConfig run_config_from_json(const json& doc) {
  RunConfig c;
  Section root(doc, "");
  root.get("seed", c.seed);
  if (const json* n = root.find("hmor")) read_hmor(*n, c.solver.hmor);
  if (const json* n = root.find("weights")) read_weights(*n, c.solver.weights);
  if (const json* n = root.find("solver")) read_solver(*n, c.solver);
  if (const json* n = root.find("gen")) read_gen(*n, c);
  if (const json* n = root.find("eval")) read_eval(*n, c.eval);
  if (const json* n = root.find("gradcheck")) read_gradcheck(*n, c.gradcheck);
  root.done();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw InvalidInput("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(doc);
}

}  // namespace hmor::cli
