#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"
#include "sagseg/sagseg.hpp"

using namespace sagseg;

namespace {

Camera simple_camera() {
  Camera c;
  c.width = 100;
  c.height = 100;
  c.fx = c.fy = 100;
  c.cx = c.cy = 50;
  return c;
}

}  // namespace

TEST(Geometry, ProjectPoint) {
  const Camera c = simple_camera();
  auto uv = project_point(c, {0, 0, 7});
  ASSERT_TRUE(uv);
  EXPECT_DOUBLE_EQ(uv->x(), 50);
  EXPECT_DOUBLE_EQ(uv->y(), 50);
  EXPECT_FALSE(project_point(c, {0, 0, 0.01}));
  EXPECT_FALSE(project_point(c, {0, 0, -1}));
  uv = project_point(c, {0.1, 0, 1});
  ASSERT_TRUE(uv);
  EXPECT_DOUBLE_EQ(uv->x(), 60);
  EXPECT_FALSE(project_point(c, {0.5, 0, 1}));  // u = 100, outside [0, W)
}

TEST(Geometry, ProjectionDepthScaleInvariant) {
  SplitMix64 rng(4);
  const Camera c = oracle::random_camera(rng, 64, 64);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d pc(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1, 5));
    const double lambda = rng.uniform(0.1, 10);
    const Eigen::Vector2d a = pinhole(c, pc), b = pinhole(c, lambda * pc);
    EXPECT_NEAR(a.x(), b.x(), 1e-9);
    EXPECT_NEAR(a.y(), b.y(), 1e-9);
  }
}

TEST(Geometry, WorldCovarianceExamples) {
  const Eigen::Vector3d s(1, 2, 3);
  EXPECT_TRUE(world_covariance(s, Eigen::Quaterniond::Identity())
                  .isApprox(Eigen::Vector3d(1, 4, 9).asDiagonal().toDenseMatrix()));
  const Eigen::Quaterniond z90(Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitZ()));
  const Eigen::Matrix3d r = world_covariance(s, z90);
  EXPECT_NEAR((r - Eigen::Vector3d(4, 1, 9).asDiagonal().toDenseMatrix()).norm(), 0, 1e-12);
  SplitMix64 rng(2);
  for (int i = 0; i < 10; ++i) {
    Eigen::Quaterniond q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1));
    const Eigen::Matrix3d iso = world_covariance({0.3, 0.3, 0.3}, q.normalized());
    EXPECT_NEAR((iso - 0.09 * Eigen::Matrix3d::Identity()).norm(), 0, 1e-12);
  }
}

TEST(Geometry, WorldCovarianceEigenvalues) {
  SplitMix64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d s(rng.uniform(0.01, 3), rng.uniform(0.01, 3), rng.uniform(0.01, 3));
    Eigen::Quaterniond q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1));
    const Eigen::Matrix3d cov = world_covariance(s, q.normalized());
    EXPECT_NEAR((cov - cov.transpose()).norm(), 0, 1e-12);
    Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cov).eigenvalues();
    Eigen::Vector3d sq = s.cwiseProduct(s);
    std::sort(ev.data(), ev.data() + 3);
    std::sort(sq.data(), sq.data() + 3);
    EXPECT_NEAR((ev - sq).cwiseAbs().maxCoeff(), 0, 1e-9);
  }
}

TEST(Geometry, ProjectCovarianceExamples) {
  const Camera c = simple_camera();
  const Eigen::Matrix2d floor = project_covariance(c, {0, 0, 2}, Eigen::Matrix3d::Zero());
  EXPECT_TRUE(floor.isApprox(0.3 * Eigen::Matrix2d::Identity()));

  const Eigen::Matrix3d iso = 0.01 * Eigen::Matrix3d::Identity();
  const Eigen::Matrix2d a = project_covariance(c, {0, 0, 2}, iso, 0.0);
  EXPECT_NEAR(a(0, 0), a(1, 1), 1e-12);
  EXPECT_NEAR(a(0, 1), 0, 1e-12);
  const Eigen::Matrix2d b = project_covariance(c, {0, 0, 4}, iso, 0.0);
  EXPECT_NEAR(b(0, 0) / a(0, 0), 0.25, 1e-12);

  EXPECT_THROW(project_covariance(c, {0, 0, -1}, iso), ContractError);
}

// The projected covariance must match J_fd * Sigma * J_fd^T, with J_fd a
// central finite-difference Jacobian of the world-to-pixel map.
TEST(Geometry, ProjectCovarianceMatchesFiniteDifferences) {
  SplitMix64 rng(5);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const Camera c = oracle::random_camera(rng, 64, 64);
    const Eigen::Vector3d p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                            rng.uniform(-0.5, 0.5));
    if (!project_point(c, p)) continue;
    Eigen::Quaterniond q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1));
    const Eigen::Matrix3d sigma =
        world_covariance({rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3)},
                         q.normalized());
    const double h = 1e-4;
    Eigen::Matrix<double, 2, 3> j;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e[k] = h;
      j.col(k) = (pinhole(c, c.to_camera(p + e)) - pinhole(c, c.to_camera(p - e))) / (2 * h);
    }
    const Eigen::Matrix2d fd = j * sigma * j.transpose();
    const Eigen::Matrix2d got = project_covariance(c, p, sigma, 0.0);
    EXPECT_LT((got - fd).norm() / fd.norm(), 1e-3);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Geometry, LookAtAxisThroughTarget) {
  SplitMix64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d eye(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Eigen::Vector3d target(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    Camera c = simple_camera();
    c.world_to_camera = look_at(eye, target, Eigen::Vector3d::UnitZ());
    EXPECT_NO_THROW(c.validate());
    const Eigen::Vector3d pc = c.to_camera(target);
    EXPECT_NEAR(pc.x(), 0, 1e-9);
    EXPECT_NEAR(pc.y(), 0, 1e-9);
    EXPECT_NEAR(pc.z(), (target - eye).norm(), 1e-9);
    EXPECT_NEAR((c.center() - eye).norm(), 0, 1e-9);
  }
}

TEST(Geometry, CameraValidation) {
  Camera c = simple_camera();
  EXPECT_NO_THROW(c.validate());
  Camera bad = c;
  bad.fx = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.cx = 100;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.world_to_camera(0, 0) = 2;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.world_to_camera(2, 2) = -1;  // reflection
  EXPECT_THROW(bad.validate(), ConfigError);
}
