#include "hmor/skeleton.hpp"

#include "hmor/error.hpp"

#include <array>
#include <cmath>
#include <string>

namespace hmor {

namespace {

constexpr double kRootTolerance = 1e-6;

constexpr std::array<std::string_view, 17> kDefault17Names = {
    "pelvis",         "spine",       "neck",        "head",
    "left_shoulder",  "left_elbow",  "left_wrist",  "right_shoulder",
    "right_elbow",    "right_wrist", "left_hip",    "left_knee",
    "left_ankle",     "right_hip",   "right_knee",  "right_ankle",
    "head_top"};

}  // namespace

void SkeletonTopology::validate() const {
  if (joint_count < 1) {
    throw InvalidInput("topology needs at least one joint");
  }
  if (root_index < 0 || root_index >= joint_count) {
    throw InvalidInput("root_index " + std::to_string(root_index) +
                       " out of range for " + std::to_string(joint_count) + " joints");
  }
  for (std::size_t s = 0; s < parts.size(); ++s) {
    const auto& p = parts[s];
    if (p.start < 0 || p.start >= joint_count || p.end < 0 || p.end >= joint_count) {
      throw InvalidInput("part " + std::to_string(s) + " references a joint out of range");
    }
    if (p.start == p.end) {
      throw InvalidInput("part " + std::to_string(s) + " has identical endpoints");
    }
  }
}

SkeletonTopology SkeletonTopology::default17() {
  return SkeletonTopology{
      .joint_count = 17,
      .root_index = 0,
      .parts = {
          {2, 16},   // neck - head top
          {0, 2},    // pelvis - neck
          {2, 4},    // neck - left shoulder
          {2, 7},    // neck - right shoulder
          {4, 5},    // left upper arm
          {7, 8},    // right upper arm
          {5, 6},    // left forearm
          {8, 9},    // right forearm
          {0, 10},   // pelvis - left hip
          {0, 13},   // pelvis - right hip
          {10, 11},  // left thigh
          {13, 14},  // right thigh
          {11, 12},  // left shin
          {14, 15},  // right shin
      }};
}

std::string_view default17_joint_name(int joint) {
  if (joint < 0 || joint >= static_cast<int>(kDefault17Names.size())) {
    return "unknown";
  }
  return kDefault17Names[static_cast<std::size_t>(joint)];
}

void validate_person(const Person& person, const SkeletonTopology& topology) {
  if (!(person.box.w > 0.0) || !(person.box.h > 0.0)) {
    throw InvalidInput("bounding box width and height must be positive");
  }
  if (static_cast<int>(person.joints.size()) != topology.joint_count) {
    throw InvalidInput("pose has " + std::to_string(person.joints.size()) +
                       " joints, topology expects " +
                       std::to_string(topology.joint_count));
  }
  if (!(person.root_depth > 0.0)) {
    throw InvalidInput("root depth must be positive, got " +
                       std::to_string(person.root_depth));
  }
  if (!(person.roi_area > 0.0)) {
    throw InvalidInput("roi area must be positive");
  }
  const double root_rel =
      person.joints[static_cast<std::size_t>(topology.root_index)].z_rel;
  if (std::abs(root_rel) > kRootTolerance) {
    throw InvalidInput("root joint z_rel must be 0, got " + std::to_string(root_rel));
  }
}

Person make_person(const BoundingBox& box, RelativePose joints, double root_depth,
                   const SkeletonTopology& topology, std::optional<double> roi_area) {
  Person person{.box = box,
                .joints = std::move(joints),
                .root_depth = root_depth,
                .roi_area = roi_area.value_or(box.area())};
  validate_person(person, topology);
  person.joints[static_cast<std::size_t>(topology.root_index)].z_rel = 0.0;
  return person;
}

void validate_scene(const Scene& scene) {
  scene.topology.validate();
  if (scene.persons.empty()) {
    throw InvalidInput("scene must contain at least one person");
  }
  for (const auto& person : scene.persons) {
    validate_person(person, scene.topology);
  }
}

AbsolutePose assemble_absolute(const Person& person, const Camera& camera) {
  AbsolutePose pose;
  pose.reserve(person.joints.size());
  for (std::size_t j = 0; j < person.joints.size(); ++j) {
    const auto& joint = person.joints[j];
    const double depth = joint.z_rel + person.root_depth;
    if (!(depth > 0.0)) {
      throw InvalidDepth("joint " + std::to_string(j) + " has non-positive depth " +
                         std::to_string(depth));
    }
    pose.push_back(back_project(camera, joint.u + person.box.u_top,
                                joint.v + person.box.v_top, depth));
  }
  return pose;
}

std::vector<AbsolutePose> assemble_scene(const Scene& scene) {
  std::vector<AbsolutePose> poses;
  poses.reserve(scene.persons.size());
  for (const auto& person : scene.persons) {
    poses.push_back(assemble_absolute(person, scene.camera));
  }
  return poses;
}

std::vector<Vec3> part_vectors(std::span<const Vec3> pose,
                               const SkeletonTopology& topology) {
  std::vector<Vec3> parts;
  parts.reserve(topology.parts.size());
  for (const auto& edge : topology.parts) {
    parts.push_back(pose[static_cast<std::size_t>(edge.end)] -
                    pose[static_cast<std::size_t>(edge.start)]);
  }
  return parts;
}

Vec3 instance_position(std::span<const Vec3> pose) {
  Vec3 sum = Vec3::Zero();
  for (const auto& joint : pose) {
    sum += joint;
  }
  return sum / static_cast<double>(pose.size());
}

}  // namespace hmor
