#pragma once

// Minimal absolute pose from three point/bearing pairs (Grunert's quartic).

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "ellipose/error.hpp"
#include "ellipose/geometry.hpp"

namespace ellipose {

// World-to-camera rigid transform: x_cam = rotation * x_world + translation.
struct RigidPose {
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d translation = Vector3d::Zero();
};

namespace detail {

// Real roots of c[4] x^4 + ... + c[0] from the companion matrix, each
// refined with a few Newton steps.
inline std::vector<double> QuarticRealRoots(const std::array<double, 5>& c) {
  std::vector<double> roots;
  const double scale = std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2]),
                                  std::abs(c[3]), std::abs(c[4])});
  if (scale == 0.0) return roots;
  int degree = 4;
  while (degree > 0 && std::abs(c[degree]) <= 1e-14 * scale) --degree;
  if (degree == 0) return roots;

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 0; i < degree; ++i) companion(0, i) = -c[degree - 1 - i] / c[degree];
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) return roots;

  auto eval = [&](double x, double* deriv) {
    double p = 0.0;
    double dp = 0.0;
    for (int i = degree; i >= 0; --i) {
      dp = dp * x + p;
      p = p * x + c[i];
    }
    *deriv = dp;
    return p;
  };
  for (const std::complex<double>& z : solver.eigenvalues()) {
    if (std::abs(z.imag()) > 1e-6 * std::max(1.0, std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 8; ++it) {
      double d = 0.0;
      const double p = eval(x, &d);
      if (d == 0.0) break;
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    roots.push_back(x);
  }
  return roots;
}

}  // namespace detail

// Poses mapping the three world points onto the three bearings, at most four.
// Bearings are unit vectors in the camera frame.
inline std::vector<RigidPose> SolveP3P(const std::array<Vector3d, 3>& points,
                                       const std::array<Vector3d, 3>& bearings) {
  const double span = std::max({(points[1] - points[0]).norm(), (points[2] - points[0]).norm(),
                                (points[2] - points[1]).norm()});
  const double area2 = (points[1] - points[0]).cross(points[2] - points[0]).norm();
  if (!(span > 0.0) || area2 <= 1e-9 * span * span) {
    throw Error(ErrorCode::kCollinearPoints, "P3P needs three non-collinear points");
  }
  std::array<Vector3d, 3> f;
  for (int i = 0; i < 3; ++i) {
    const double n = bearings[i].norm();
    if (!(n > 0.0) || !bearings[i].allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "bearing must be a finite non-zero vector");
    }
    f[i] = bearings[i] / n;
  }
  for (int i = 0; i < 3; ++i) {
    if (f[i].cross(f[(i + 1) % 3]).norm() < 1e-12) {
      throw Error(ErrorCode::kInvalidArgument, "bearings must be pairwise distinct");
    }
  }

  // Side lengths opposite each point and the angles between rays.
  const double a = (points[1] - points[2]).norm();
  const double b = (points[0] - points[2]).norm();
  const double c = (points[0] - points[1]).norm();
  const double cos_alpha = f[1].dot(f[2]);
  const double cos_beta = f[0].dot(f[2]);
  const double cos_gamma = f[0].dot(f[1]);

  const double a2 = a * a;
  const double b2 = b * b;
  const double c2 = c * c;
  const double amc = (a2 - c2) / b2;
  const double apc = (a2 + c2) / b2;
  const double ca2 = cos_alpha * cos_alpha;
  const double cb2 = cos_beta * cos_beta;
  const double cg2 = cos_gamma * cos_gamma;

  std::array<double, 5> coeffs;
  coeffs[4] = (amc - 1.0) * (amc - 1.0) - 4.0 * c2 / b2 * ca2;
  coeffs[3] = 4.0 * (amc * (1.0 - amc) * cos_beta - (1.0 - apc) * cos_alpha * cos_gamma +
                     2.0 * c2 / b2 * ca2 * cos_beta);
  coeffs[2] = 2.0 * (amc * amc - 1.0 + 2.0 * amc * amc * cb2 + 2.0 * (b2 - c2) / b2 * ca2 -
                     4.0 * apc * cos_alpha * cos_beta * cos_gamma +
                     2.0 * (b2 - a2) / b2 * cg2);
  coeffs[1] = 4.0 * (-amc * (1.0 + amc) * cos_beta + 2.0 * a2 / b2 * cg2 * cos_beta -
                     (1.0 - apc) * cos_alpha * cos_gamma);
  coeffs[0] = (1.0 + amc) * (1.0 + amc) - 4.0 * a2 / b2 * cg2;

  // Law-of-cosines residuals in the three depths.
  auto residual = [&](const Vector3d& s) {
    return Vector3d(s[1] * s[1] + s[2] * s[2] - 2.0 * s[1] * s[2] * cos_alpha - a2,
                    s[0] * s[0] + s[2] * s[2] - 2.0 * s[0] * s[2] * cos_beta - b2,
                    s[0] * s[0] + s[1] * s[1] - 2.0 * s[0] * s[1] * cos_gamma - c2);
  };

  std::vector<Vector3d> depth_sets;
  for (double v : detail::QuarticRealRoots(coeffs)) {
    if (!(v > 0.0)) continue;
    const double denom = 1.0 + v * v - 2.0 * v * cos_beta;
    if (!(denom > 0.0)) continue;
    const double s1 = std::sqrt(b2 / denom);
    const double s3 = v * s1;
    // s2 from the P1-P2 side: s2^2 - 2 s1 cos_gamma s2 + s1^2 - c^2 = 0. The
    // branch agreeing with the P2-P3 side is kept.
    const double disc = s1 * s1 * cg2 - (s1 * s1 - c2);
    if (disc < -1e-9 * c2) continue;
    const double root = std::sqrt(std::max(0.0, disc));
    Vector3d best;
    double best_err = std::numeric_limits<double>::infinity();
    for (double s2 : {s1 * cos_gamma + root, s1 * cos_gamma - root}) {
      if (!(s2 > 0.0)) continue;
      const Vector3d s(s1, s2, s3);
      const double err = std::abs(residual(s)[0]);
      if (err < best_err) {
        best_err = err;
        best = s;
      }
    }
    if (!std::isfinite(best_err)) continue;

    // Gauss-Newton polish of the depths against all three sides.
    Vector3d s = best;
    for (int it = 0; it < 5; ++it) {
      const Vector3d r = residual(s);
      Matrix3d jac;
      jac << 0.0, 2.0 * (s[1] - s[2] * cos_alpha), 2.0 * (s[2] - s[1] * cos_alpha),
          2.0 * (s[0] - s[2] * cos_beta), 0.0, 2.0 * (s[2] - s[0] * cos_beta),
          2.0 * (s[0] - s[1] * cos_gamma), 2.0 * (s[1] - s[0] * cos_gamma), 0.0;
      const Vector3d step = jac.fullPivLu().solve(r);
      if (!step.allFinite()) break;
      const Vector3d next = s - step;
      if (residual(next).norm() >= r.norm()) break;
      s = next;
    }
    if (residual(s).cwiseAbs().maxCoeff() > 1e-6 * span * span) continue;
    depth_sets.push_back(s);
  }

  std::vector<RigidPose> poses;
  for (const Vector3d& s : depth_sets) {
    Matrix3d world;
    Matrix3d cam;
    for (int i = 0; i < 3; ++i) {
      world.col(i) = points[i];
      cam.col(i) = s[i] * f[i];
    }
    const Eigen::Matrix4d tf = Eigen::umeyama(world, cam, false);
    RigidPose pose{tf.topLeftCorner<3, 3>(), tf.topRightCorner<3, 1>()};
    // Reject spurious roots and double roots already in the set.
    bool ok = true;
    for (int i = 0; i < 3 && ok; ++i) {
      const Vector3d x = pose.rotation * points[i] + pose.translation;
      ok = std::atan2(x.cross(f[i]).norm(), x.dot(f[i])) <= 1e-6;
    }
    for (const RigidPose& other : poses) {
      if (!ok) break;
      ok = (other.rotation - pose.rotation).cwiseAbs().maxCoeff() > 1e-9 ||
           (other.translation - pose.translation).norm() > 1e-9 * span;
    }
    if (ok) poses.push_back(pose);
  }
  if (poses.empty()) {
    throw Error(ErrorCode::kNoRealSolution, "no positive-depth P3P solution");
  }
  return poses;
}

}  // namespace ellipose
