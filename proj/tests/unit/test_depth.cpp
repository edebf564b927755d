#include "hmor/depth.hpp"
#include "hmor/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace hmor {
namespace {

const Camera kCam(1000, 1000, 500, 500);

TEST(NormalizeDepth, Values) {
  EXPECT_DOUBLE_EQ(normalize_depth(1234.5, Camera(1, 1, 0, 0)), 1234.5);
  EXPECT_DOUBLE_EQ(normalize_depth(5000, kCam), 5.0);
  EXPECT_NEAR(normalize_depth(5000, Camera(400, 900, 0, 0)), 5000.0 / 600.0, 1e-12);
  EXPECT_THROW(normalize_depth(0, kCam), InvalidInput);
}

TEST(EquivalentDepth, Values) {
  EXPECT_DOUBLE_EQ(equivalent_depth(5.0, 900, 900), 5.0);
  EXPECT_DOUBLE_EQ(equivalent_depth(5.0, 40000, 10000), 10.0);
  EXPECT_NEAR(equivalent_depth(5.0, 3 * 40000, 3 * 10000), 10.0, 1e-12);
  EXPECT_THROW(equivalent_depth(5.0, 0, 1), InvalidInput);
}

TEST(RecoverAbsoluteDepth, HandChain) {
  EXPECT_NEAR(recover_absolute_depth(0.5, 9.5, kCam, 40000, 10000), 5000.0, 1e-9);
}

TEST(RecoverAbsoluteDepth, InvertsNormalizeAndEquivalent) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> z(100, 20000), f(200, 3000), a(100, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const Camera cam(f(rng), f(rng), 0, 0);
    const double za = z(rng), box = a(rng), roi = a(rng);
    const double eq = equivalent_depth(normalize_depth(za, cam), box, roi);
    EXPECT_NEAR(recover_absolute_depth(0.0, eq, cam, box, roi), za, 1e-9 * za);
  }
}

TEST(RecoverAbsoluteDepth, LinearInEquivalentDepth) {
  const double a = recover_absolute_depth(0.25, 3.0, kCam, 500, 700);
  const double b = recover_absolute_depth(0.5, 6.0, kCam, 500, 700);
  EXPECT_NEAR(b, 2 * a, 1e-9);
  EXPECT_THROW(recover_absolute_depth(-5.0, 1.0, kCam, 1, 1), InvalidDepth);
}

TEST(LossInit, Values) {
  const std::vector<double> gt{5000};
  EXPECT_EQ(loss_init(std::vector<double>{5.0}, gt, kCam), 0.0);
  EXPECT_NEAR(loss_init(std::vector<double>{5.25}, gt, kCam), 0.25, 1e-12);
  EXPECT_NEAR(loss_init(std::vector<double>{5.1, 2.7}, std::vector<double>{5000, 3000}, kCam), 0.2,
              1e-12);
  EXPECT_THROW(loss_init(std::vector<double>{1, 2}, gt, kCam), InvalidInput);
}

TEST(LossRefine, Values) {
  // z_init 4.5 with a_box = a_roi: delta 0.5 lands exactly on 5000 mm.
  const auto exact = make_depth_estimate(4.5, 0.5, 100, 100);
  EXPECT_NEAR(loss_refine(std::vector{exact}, std::vector<double>{5000}, kCam), 0.0, 1e-12);
  const auto off = make_depth_estimate(4.5, 1.0, 100, 100);
  EXPECT_NEAR(loss_refine(std::vector{off}, std::vector<double>{5000}, kCam), 0.5, 1e-12);
  // Residuals 0.5 and 0.25 (the second in equivalent units, box/roi = 4).
  const auto second = make_depth_estimate(2.0, 0.25, 400, 100);
  EXPECT_NEAR(loss_refine(std::vector{off, second}, std::vector<double>{5000, 2000}, kCam),
              (0.5 + 0.25) / 2, 1e-12);
}

TEST(LossPose, HandValue) {
  std::vector<RelativePose> gt{RelativePose(17, RelativeJoint{1, 2, 3})};
  auto pred = gt;
  EXPECT_EQ(loss_pose(pred, gt), 0.0);
  pred[0][4] = {2, 4, 6};
  EXPECT_NEAR(loss_pose(pred, gt), 6.0 / 17.0, 1e-12);
  EXPECT_NEAR(loss_pose(pred, gt), 0.352941, 1e-6);
}

TEST(LossPose, InvariantToConsistentPersonOrder) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 10);
  std::vector<RelativePose> pred(3, RelativePose(17)), gt(3, RelativePose(17));
  for (int m = 0; m < 3; ++m) {
    for (int j = 0; j < 17; ++j) {
      pred[m][j] = {n(rng), n(rng), n(rng)};
      gt[m][j] = {n(rng), n(rng), n(rng)};
    }
  }
  const double a = loss_pose(pred, gt);
  std::swap(pred[0], pred[2]);
  std::swap(gt[0], gt[2]);
  EXPECT_NEAR(loss_pose(pred, gt), a, 1e-12);
}

TEST(LossAbs, Values) {
  std::vector<AbsolutePose> gt{AbsolutePose(17, Vec3(1, 2, 3))};
  auto pred = gt;
  EXPECT_EQ(loss_abs(pred, gt), 0.0);
  for (auto& k : pred[0]) k += Vec3(10, 0, 0);
  EXPECT_NEAR(loss_abs(pred, gt), 10.0, 1e-12);
}

TEST(LossAbs, MatchesBruteForceSum) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 100);
  std::vector<AbsolutePose> pred(2), gt(2);
  double sum = 0.0;
  for (int m = 0; m < 2; ++m) {
    for (int j = 0; j < 17; ++j) {
      pred[m].emplace_back(n(rng), n(rng), n(rng));
      gt[m].emplace_back(n(rng), n(rng), n(rng));
      for (int d = 0; d < 3; ++d) sum += std::abs(pred[m][j][d] - gt[m][j][d]);
    }
  }
  EXPECT_NEAR(loss_abs(pred, gt), sum / 34.0, 1e-9);
}

TEST(TotalLoss, WeightedSum) {
  EXPECT_EQ(total_loss({}), 0.0);
  const LossComponents c{0.1, 0.2, 0.3, 0.4, 0.0};
  EXPECT_NEAR(total_loss(c), 1.0, 1e-12);
  LossWeights w;
  w.hmor = 0.0;
  w.abs = 1.0;
  const LossComponents d{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_NEAR(total_loss(d, w), 0.1 + 0.2 + 0.3 + 0.5, 1e-12);
  w.pose = -1;
  EXPECT_THROW(w.validate(), InvalidInput);
}

TEST(Gradients, SignConventionAtKink) {
  const auto g = loss_init_grad(std::vector<double>{5.0}, std::vector<double>{5000}, kCam);
  EXPECT_EQ(g[0], 0.0);
  const auto h = loss_init_grad(std::vector<double>{5.5, 4.0}, std::vector<double>{5000, 5000}, kCam);
  EXPECT_DOUBLE_EQ(h[0], 0.5);
  EXPECT_DOUBLE_EQ(h[1], -0.5);
}

}  // namespace
}  // namespace hmor
