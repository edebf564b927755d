#pragma once

// Independent reference implementations used only by tests. They avoid the
// library's own helpers so a shared bug cannot hide behind itself.

#include "hmor/skeleton.hpp"

#include <array>
#include <functional>
#include <vector>

namespace hmor::oracle {

struct P3 {
  double x, y, z;
};

/// Camera-frame joint from intrinsics, written out longhand.
P3 pinhole_lift(double fx, double fy, double cx, double cy, double u, double v, double z);

/// All absolute joints of a scene, via pinhole_lift.
std::vector<std::vector<P3>> lift_scene(const Scene& scene);

double dot(const P3& a, const P3& b);
P3 cross(const P3& a, const P3& b);
P3 sub(const P3& a, const P3& b);

/// Sign of the ordering expected for a pair, for each level, computed by
/// nested loops over persons and elements. Returns labels in enumeration order
/// (lexicographic over flattened (person, element) index, first < second).
struct BrutePairs {
  std::vector<int> instance;
  std::vector<int> part;
  std::vector<int> joint;
};
BrutePairs brute_labels(const std::vector<std::vector<P3>>& poses, const SkeletonTopology& topo,
                        const P3& view);

/// Min-cost assignment by trying every permutation (rows <= cols).
double brute_assignment_cost(const std::vector<std::vector<double>>& cost);

/// Greedy assignment: repeatedly take the globally cheapest remaining cell.
double greedy_assignment_cost(const std::vector<std::vector<double>>& cost);

/// Percentage of errors <= threshold.
double brute_pck(const std::vector<double>& errors, double threshold);

/// Central differences of f at x with step h.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h);

/// Two persons on the optical axis side by side, root depths z1 and z2 (mm),
/// every joint at z_rel = 0 so a person's mean depth equals its root depth.
Scene flat_two_person_scene(double z1, double z2);

}  // namespace hmor::oracle
