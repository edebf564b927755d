#include "hmor/geometry.hpp"

#include "hmor/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace hmor {

namespace {

constexpr double kUnitTolerance = 1e-9;

bool is_unit(const Vec3& v) { return std::abs(v.norm() - 1.0) <= kUnitTolerance; }

}  // namespace

Camera::Camera(double fx, double fy, double cx, double cy, const Vec3& normal)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), normal_(normal) {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw InvalidInput("camera focal lengths must be positive (fx=" +
                       std::to_string(fx) + ", fy=" + std::to_string(fy) + ")");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw InvalidInput("camera principal point must be finite");
  }
  if (!is_unit(normal)) {
    throw InvalidInput("camera normal must be a unit vector");
  }
}

double Camera::mean_focal() const noexcept { return std::sqrt(fx_ * fy_); }

Vec3 back_project(const Camera& camera, double pixel_u, double pixel_v,
                  double depth_abs) {
  if (!(depth_abs > 0.0)) {
    throw InvalidInput("back_project requires positive depth, got " +
                       std::to_string(depth_abs));
  }
  return {depth_abs * (pixel_u - camera.cx()) / camera.fx(),
          depth_abs * (pixel_v - camera.cy()) / camera.fy(), depth_abs};
}

Vec2 project(const Camera& camera, const Vec3& point) {
  if (!(point.z() > 0.0)) {
    throw BehindCamera("cannot project point with z=" + std::to_string(point.z()));
  }
  return {camera.fx() * point.x() / point.z() + camera.cx(),
          camera.fy() * point.y() / point.z() + camera.cy()};
}

Vec3 project_to_plane(const Vec3& vec, const Vec3& normal) {
  return vec - vec.dot(normal) * normal;
}

ViewVector::ViewVector(const Vec3& direction) : direction_(direction) {
  if (!is_unit(direction)) {
    throw InvalidInput("view direction must be a unit vector");
  }
}

ViewVector sample_view(double theta, double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw InvalidInput("view sample u must lie in [0, 1], got " + std::to_string(u));
  }
  const double r = std::sqrt(1.0 - u * u);
  Vec3 dir(r * std::cos(theta), r * std::sin(theta), u);
  // Renormalize away the last ulp so the unit invariant holds tightly.
  dir /= dir.norm();
  return ViewVector(dir);
}

ViewVector sample_view(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> height(0.0, 1.0);
  const double theta = angle(rng);
  const double u = height(rng);
  return sample_view(theta, u);
}

}  // namespace hmor
