#include <gtest/gtest.h>

#include "ellipose/p3p.hpp"
#include "ellipose/random.hpp"

namespace ellipose {
namespace {

struct Instance {
  RigidPose truth;
  std::array<Vector3d, 3> points;
  std::array<Vector3d, 3> bearings;
};

// Random camera looking at three random points in front of it.
Instance RandomInstance(Rng& rng) {
  Instance in;
  const Vector3d axis = rng.UnitVector();
  in.truth.rotation = Eigen::AngleAxisd(rng.Uniform(0.0, kPi), axis).toRotationMatrix();
  in.truth.translation = Vector3d(rng.Uniform(-2, 2), rng.Uniform(-2, 2), rng.Uniform(-2, 2));
  for (int i = 0; i < 3; ++i) {
    const Vector3d cam(rng.Uniform(-0.6, 0.6), rng.Uniform(-0.45, 0.45), 1.0);
    const Vector3d x_cam = cam * rng.Uniform(1.0, 8.0);
    in.points[i] = in.truth.rotation.transpose() * (x_cam - in.truth.translation);
    in.bearings[i] = x_cam.normalized();
  }
  return in;
}

double RotationGap(const Matrix3d& a, const Matrix3d& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

bool Contains(const std::vector<RigidPose>& poses, const RigidPose& truth) {
  for (const RigidPose& p : poses) {
    if ((p.translation - truth.translation).norm() <= 1e-6 &&
        RotationGap(p.rotation, truth.rotation) <= 1e-6) {
      return true;
    }
  }
  return false;
}

TEST(P3P, RecoversKnownCamera) {
  RigidPose truth;
  truth.rotation = Eigen::AngleAxisd(0.3, Vector3d(0.2, -1, 0.4).normalized()).toRotationMatrix();
  truth.translation = Vector3d(0.5, -0.2, 4.0);
  const std::array<Vector3d, 3> points = {Vector3d(0, 0, 0), Vector3d(1, 0.2, 0.3),
                                          Vector3d(-0.4, 0.9, -0.2)};
  std::array<Vector3d, 3> bearings;
  for (int i = 0; i < 3; ++i) {
    bearings[i] = (truth.rotation * points[i] + truth.translation).normalized();
  }
  const std::vector<RigidPose> poses = SolveP3P(points, bearings);
  EXPECT_LE(poses.size(), 4u);
  EXPECT_TRUE(Contains(poses, truth));
}

TEST(P3P, CollinearPointsRejected) {
  const std::array<Vector3d, 3> points = {Vector3d(0, 0, 0), Vector3d(1, 1, 1),
                                          Vector3d(2, 2, 2)};
  const std::array<Vector3d, 3> bearings = {Vector3d(0, 0, 1), Vector3d(0.1, 0, 1).normalized(),
                                            Vector3d(0, 0.1, 1).normalized()};
  try {
    SolveP3P(points, bearings);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kCollinearPoints);
  }
}

TEST(P3P, RepeatedBearingRejected) {
  const std::array<Vector3d, 3> points = {Vector3d(0, 0, 0), Vector3d(1, 0, 0),
                                          Vector3d(0, 1, 0)};
  const std::array<Vector3d, 3> bearings = {Vector3d(0, 0, 1), Vector3d(0, 0, 1),
                                            Vector3d(0, 0.1, 1).normalized()};
  EXPECT_THROW(SolveP3P(points, bearings), Error);
}

TEST(P3P, InconsistentRaysHaveNoSolution) {
  // Points 10 m apart seen along rays 1e-3 rad apart cannot sit in front of
  // the camera with the required separations.
  const std::array<Vector3d, 3> points = {Vector3d(0, 0, 0), Vector3d(10, 0, 0),
                                          Vector3d(0, 10, 0)};
  const std::array<Vector3d, 3> bearings = {
      Vector3d(0, 0, 1), Vector3d(1e-3, 0, 1).normalized(), Vector3d(0, 1e-3, 1).normalized()};
  try {
    const std::vector<RigidPose> poses = SolveP3P(points, bearings);
    // Any returned pose must still be exact; far-away solutions are valid.
    for (const RigidPose& p : poses) {
      for (int i = 0; i < 3; ++i) {
        const Vector3d x = p.rotation * points[i] + p.translation;
        EXPECT_LT(std::acos(std::min(1.0, x.normalized().dot(bearings[i]))), 1e-6);
      }
    }
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kNoRealSolution);
  }
}

TEST(P3P, RandomConfigurationsSelfConsistent) {
  Rng rng(99);
  int contained = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance in = RandomInstance(rng);
    const std::vector<RigidPose> poses = SolveP3P(in.points, in.bearings);
    ASSERT_LE(poses.size(), 4u);
    for (const RigidPose& p : poses) {
      EXPECT_LT((p.rotation * p.rotation.transpose() - Matrix3d::Identity()).norm(), 1e-9);
      EXPECT_NEAR(p.rotation.determinant(), 1.0, 1e-9);
      for (int i = 0; i < 3; ++i) {
        const Vector3d x = p.rotation * in.points[i] + p.translation;
        EXPECT_LT(std::atan2(x.cross(in.bearings[i]).norm(), x.dot(in.bearings[i])), 1e-6);
      }
    }
    contained += Contains(poses, in.truth);
  }
  EXPECT_EQ(contained, 1000);
}

TEST(QuarticRoots, KnownPolynomial) {
  // (x - 1)(x - 2)(x + 3)(x - 0.5) = x^4 - 0.5 x^3 - 7 x^2 + 9.5 x - 3.
  const std::vector<double> roots = detail::QuarticRealRoots({-3.0, 9.5, -7.0, -0.5, 1.0});
  ASSERT_EQ(roots.size(), 4u);
  std::vector<double> sorted = roots;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_NEAR(sorted[0], -3.0, 1e-12);
  EXPECT_NEAR(sorted[1], 0.5, 1e-12);
  EXPECT_NEAR(sorted[2], 1.0, 1e-12);
  EXPECT_NEAR(sorted[3], 2.0, 1e-12);
  // x^4 + 1 has no real roots.
  EXPECT_TRUE(detail::QuarticRealRoots({1.0, 0.0, 0.0, 0.0, 1.0}).empty());
}

}  // namespace
}  // namespace ellipose
