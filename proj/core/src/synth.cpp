#include "hmor/synth.hpp"

#include "hmor/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace hmor {

namespace {

constexpr int kMaxPlacementAttempts = 100;
constexpr double kReferenceThigh = 450.0;
constexpr double kJitterFraction = 20.0 / kReferenceThigh;
constexpr double kPelvisHeightRange = 150.0;
constexpr std::uint64_t kPerturbStream = 0x9E3779B97F4A7C15ULL;

// Standing pose, millimeters at a 450 mm thigh.
constexpr std::array<std::array<double, 3>, 17> kTemplate = {{
    {0, 0, 0},            // pelvis
    {0, -250, 10},        // spine
    {0, -500, 0},         // neck
    {0, -600, 20},        // head
    {-180, -480, 0},      // left shoulder
    {-210, -210, 40},     // left elbow
    {-220, 40, 80},       // left wrist
    {180, -480, 0},       // right shoulder
    {210, -210, 40},      // right elbow
    {220, 40, 80},        // right wrist
    {-100, 0, 0},         // left hip
    {-110, 450, 30},      // left knee
    {-115, 880, 0},       // left ankle
    {100, 0, 0},          // right hip
    {110, 450, 30},       // right knee
    {115, 880, 0},        // right ankle
    {0, -750, 0},         // head top
}};

bool inside(const Vec2& px, const ImageFrame& frame) {
  return px.x() >= 0.0 && px.x() < frame.width && px.y() >= 0.0 && px.y() < frame.height;
}

std::optional<Person> place_person(const GenSpec& spec, const SkeletonTopology& topology,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> yaw_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> depth_dist(spec.depth_min, spec.depth_max);
  std::uniform_real_distribution<double> lateral_dist(-spec.lateral_range, spec.lateral_range);
  std::uniform_real_distribution<double> height_dist(-kPelvisHeightRange, kPelvisHeightRange);
  std::normal_distribution<double> jitter(0.0, spec.bone_scale * kJitterFraction);

  const auto skeleton = template_skeleton(spec.bone_scale);
  const Eigen::Matrix3d rotation =
      Eigen::AngleAxisd(yaw_dist(rng), Vec3::UnitY()).toRotationMatrix();
  const double depth = depth_dist(rng);
  const Vec3 pelvis(lateral_dist(rng), height_dist(rng), depth);

  std::vector<Vec3> joints;
  joints.reserve(skeleton.size());
  for (const auto& local : skeleton) {
    Vec3 noise(jitter(rng), jitter(rng), jitter(rng));
    joints.push_back(rotation * local + pelvis + noise);
  }
  // The root carries the person's depth exactly.
  joints[static_cast<std::size_t>(topology.root_index)] = pelvis;

  std::vector<Vec2> pixels;
  pixels.reserve(joints.size());
  for (const auto& k : joints) {
    if (!(k.z() > 0.0)) return std::nullopt;
    const Vec2 px = project(spec.camera, k);
    if (!inside(px, spec.frame)) return std::nullopt;
    pixels.push_back(px);
  }

  double u_min = pixels.front().x(), u_max = u_min;
  double v_min = pixels.front().y(), v_max = v_min;
  for (const auto& px : pixels) {
    u_min = std::min(u_min, px.x());
    u_max = std::max(u_max, px.x());
    v_min = std::min(v_min, px.y());
    v_max = std::max(v_max, px.y());
  }
  const BoundingBox box{u_min, v_min, u_max - u_min, v_max - v_min};
  if (!(box.w > 0.0) || !(box.h > 0.0)) return std::nullopt;

  const double root_depth = joints[static_cast<std::size_t>(topology.root_index)].z();
  RelativePose rel;
  rel.reserve(joints.size());
  for (std::size_t j = 0; j < joints.size(); ++j) {
    rel.push_back({pixels[j].x() - box.u_top, pixels[j].y() - box.v_top,
                   joints[j].z() - root_depth});
  }
  return make_person(box, std::move(rel), root_depth, topology);
}

double min_joint_offset(const Person& person) {
  double lo = 0.0;
  for (const auto& j : person.joints) lo = std::min(lo, j.z_rel);
  return lo;
}

}  // namespace

void GenSpec::validate() const {
  if (n_persons < 1) throw InvalidInput("n_persons must be at least 1");
  if (!(depth_min > 0.0) || !(depth_max >= depth_min)) {
    throw InvalidInput("depth range must satisfy 0 < min <= max");
  }
  if (!(lateral_range >= 0.0)) throw InvalidInput("lateral_range must be non-negative");
  if (!(bone_scale > 0.0)) throw InvalidInput("bone_scale must be positive");
  if (!(frame.width > 0.0) || !(frame.height > 0.0)) {
    throw InvalidInput("image frame must have positive size");
  }
  if (const auto* g = std::get_if<GaussPerturbation>(&perturbation)) {
    if (!(g->sigma_xy >= 0.0) || !(g->sigma_z >= 0.0)) {
      throw InvalidInput("perturbation sigmas must be non-negative");
    }
  }
}

std::vector<Vec3> template_skeleton(double bone_scale) {
  const double s = bone_scale / kReferenceThigh;
  std::vector<Vec3> out;
  out.reserve(kTemplate.size());
  for (const auto& p : kTemplate) out.emplace_back(s * p[0], s * p[1], s * p[2]);
  return out;
}

Scene generate_scene(const GenSpec& spec) {
  spec.validate();
  Scene scene{.camera = spec.camera, .topology = SkeletonTopology::default17(), .persons = {}};
  std::mt19937_64 rng(spec.seed);
  for (int m = 0; m < spec.n_persons; ++m) {
    std::optional<Person> person;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !person; ++attempt) {
      person = place_person(spec, scene.topology, rng);
    }
    if (!person) {
      throw GenerationError("could not place person " + std::to_string(m) +
                            " inside the image frame after " +
                            std::to_string(kMaxPlacementAttempts) + " attempts");
    }
    scene.persons.push_back(std::move(*person));
  }
  return scene;
}

Scene perturb(const Scene& scene, const GenSpec& spec) {
  validate_scene(scene);
  Scene out = scene;
  std::mt19937_64 rng(spec.seed ^ kPerturbStream);

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GaussPerturbation>) {
          std::normal_distribution<double> unit(0.0, 1.0);
          const double f = scene.camera.mean_focal();
          for (auto& person : out.persons) {
            const double floor = 1.0 - min_joint_offset(person);
            const double z = person.root_depth + p.sigma_z * unit(rng);
            person.root_depth = std::max(z, floor);
            const double px_per_mm = f / person.root_depth;
            for (auto& joint : person.joints) {
              joint.u += p.sigma_xy * px_per_mm * unit(rng);
              joint.v += p.sigma_xy * px_per_mm * unit(rng);
            }
          }
        } else if constexpr (std::is_same_v<T, DepthSwap>) {
          for (const auto& [a, b] : p.pairs) {
            if (a < 0 || b < 0 || a >= out.person_count() || b >= out.person_count()) {
              throw InvalidInput("depth swap references a missing person");
            }
            std::swap(out.persons[static_cast<std::size_t>(a)].root_depth,
                      out.persons[static_cast<std::size_t>(b)].root_depth);
          }
        } else if constexpr (std::is_same_v<T, RootOffset>) {
          for (auto& person : out.persons) person.root_depth += p.offset_mm;
        }
      },
      spec.perturbation);

  for (const auto& person : out.persons) {
    if (!(person.root_depth + min_joint_offset(person) > 0.0)) {
      throw InvalidInput("perturbation moved a joint behind the camera");
    }
  }
  return out;
}

}  // namespace hmor
