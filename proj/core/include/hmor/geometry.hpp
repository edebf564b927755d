#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <random>

namespace hmor {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Pinhole camera with zero skew. Lengths are millimeters, pixel
/// coordinates follow the usual image convention (u right, v down), and the
/// camera frame has z along the optical axis.
class Camera {
 public:
  Camera(double fx, double fy, double cx, double cy,
         const Vec3& normal = Vec3::UnitZ());

  double fx() const noexcept { return fx_; }
  double fy() const noexcept { return fy_; }
  double cx() const noexcept { return cx_; }
  double cy() const noexcept { return cy_; }
  const Vec3& normal() const noexcept { return normal_; }

  /// sqrt(fx * fy), the focal length used for depth normalization.
  double mean_focal() const noexcept;

  bool operator==(const Camera&) const = default;

 private:
  double fx_;
  double fy_;
  double cx_;
  double cy_;
  Vec3 normal_;
};

/// Lifts a pixel at metric depth `depth_abs` into the camera frame.
Vec3 back_project(const Camera& camera, double pixel_u, double pixel_v,
                  double depth_abs);

/// Forward pinhole projection. Throws BehindCamera for z <= 0.
Vec2 project(const Camera& camera, const Vec3& point);

/// Removes the component of `vec` along the unit vector `normal`.
Vec3 project_to_plane(const Vec3& vec, const Vec3& normal);

/// A unit viewing direction expressed in camera coordinates.
class ViewVector {
 public:
  explicit ViewVector(const Vec3& direction);

  const Vec3& direction() const noexcept { return direction_; }

  static ViewVector camera_normal() { return ViewVector(Vec3::UnitZ()); }

 private:
  Vec3 direction_;
};

/// Hemisphere view (sqrt(1-u^2) cos t, sqrt(1-u^2) sin t, u). Requires
/// u in [0, 1]; theta is taken as given.
ViewVector sample_view(double theta, double u);

/// Draws theta ~ U[0, 2pi) and u ~ U[0, 1] from `rng`.
ViewVector sample_view(std::mt19937_64& rng);

}  // namespace hmor
