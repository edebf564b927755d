#pragma once

#include "hmor/geometry.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace hmor {

struct PartEdge {
  int start = 0;
  int end = 0;

  bool operator==(const PartEdge&) const = default;
};

/// Joint count, root joint and the ordered list of directed body parts.
struct SkeletonTopology {
  int joint_count = 0;
  int root_index = 0;
  std::vector<PartEdge> parts;

  int part_count() const noexcept { return static_cast<int>(parts.size()); }

  /// Throws InvalidInput when an edge is out of range or degenerate.
  void validate() const;

  /// 17 joints rooted at the pelvis with 14 parts:
  ///   0 pelvis, 1 spine, 2 neck, 3 head, 4-6 left shoulder/elbow/wrist,
  ///   7-9 right shoulder/elbow/wrist, 10-12 left hip/knee/ankle,
  ///   13-15 right hip/knee/ankle, 16 head top.
  static SkeletonTopology default17();

  bool operator==(const SkeletonTopology&) const = default;
};

std::string_view default17_joint_name(int joint);

struct BoundingBox {
  double u_top = 0.0;
  double v_top = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }

  bool operator==(const BoundingBox&) const = default;
};

/// Box-relative pixel position and depth offset from the root joint (mm).
struct RelativeJoint {
  double u = 0.0;
  double v = 0.0;
  double z_rel = 0.0;

  bool operator==(const RelativeJoint&) const = default;
};

using RelativePose = std::vector<RelativeJoint>;

/// Camera-frame joint positions in millimeters.
using AbsolutePose = std::vector<Vec3>;

struct Person {
  BoundingBox box;
  RelativePose joints;
  double root_depth = 0.0;  // z_R, mm
  double roi_area = 0.0;    // A_RoI, px^2

  bool operator==(const Person&) const = default;
};

/// Builds a person and enforces its invariants. The root's z_rel must be
/// within 1e-6 of zero and is then stored as exactly zero. `roi_area`
/// defaults to the box area.
Person make_person(const BoundingBox& box, RelativePose joints, double root_depth,
                   const SkeletonTopology& topology,
                   std::optional<double> roi_area = std::nullopt);

/// Checks a person against the topology; throws InvalidInput.
void validate_person(const Person& person, const SkeletonTopology& topology);

struct Scene {
  Camera camera;
  SkeletonTopology topology;
  std::vector<Person> persons;

  int person_count() const noexcept { return static_cast<int>(persons.size()); }

  bool operator==(const Scene&) const = default;
};

/// Throws InvalidInput unless the scene has at least one person and every
/// person satisfies the topology.
void validate_scene(const Scene& scene);

/// Back-projects every joint of `person`. Throws InvalidDepth if any joint
/// would land at non-positive depth.
AbsolutePose assemble_absolute(const Person& person, const Camera& camera);

std::vector<AbsolutePose> assemble_scene(const Scene& scene);

/// Bone vectors (end - start) in topology order.
std::vector<Vec3> part_vectors(std::span<const Vec3> pose,
                               const SkeletonTopology& topology);

/// Arithmetic mean of the joints.
Vec3 instance_position(std::span<const Vec3> pose);

}  // namespace hmor
