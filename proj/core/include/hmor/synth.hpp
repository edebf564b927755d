#pragma once

#include "hmor/geometry.hpp"
#include "hmor/skeleton.hpp"

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

namespace hmor {

struct NoPerturbation {};

/// Root depths get N(0, sigma_z) noise; every joint's pixel position gets
/// lateral N(0, sigma_xy) millimeter noise converted to pixels at the
/// person's depth.
struct GaussPerturbation {
  double sigma_xy = 0.0;
  double sigma_z = 0.0;
};

/// Exchanges root depths of the listed person pairs.
struct DepthSwap {
  std::vector<std::pair<int, int>> pairs;
};

struct RootOffset {
  double offset_mm = 0.0;
};

using Perturbation = std::variant<NoPerturbation, GaussPerturbation, DepthSwap, RootOffset>;

struct ImageFrame {
  double width = 0.0;
  double height = 0.0;
};

struct GenSpec {
  std::uint64_t seed = 0;
  int n_persons = 1;
  double depth_min = 3000.0;
  double depth_max = 7000.0;
  double lateral_range = 1500.0;  // pelvis x drawn from [-range, range]
  double bone_scale = 450.0;      // thigh length; template scales with it
  Camera camera{1000.0, 1000.0, 960.0, 540.0};
  ImageFrame frame{1920.0, 1080.0};
  Perturbation perturbation = NoPerturbation{};

  void validate() const;
};

/// Deterministic scene of `n_persons` template skeletons under random yaw,
/// placement and small joint jitter. Boxes are the tight 2D bounds of the
/// projected joints. Throws GenerationError when a person cannot be placed
/// inside the image frame within 100 attempts.
Scene generate_scene(const GenSpec& spec);

/// Returns a copy of `scene` with `spec.perturbation` applied. Noise is drawn
/// from a stream derived from `spec.seed`, independent of generation.
Scene perturb(const Scene& scene, const GenSpec& spec);

/// Template joint positions (mm, pelvis at the origin, y down) for the
/// default 17-joint topology at the given thigh length.
std::vector<Vec3> template_skeleton(double bone_scale);

}  // namespace hmor
