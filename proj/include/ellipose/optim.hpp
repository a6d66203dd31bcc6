#pragma once

// BFGS with Armijo backtracking and central-difference gradients, plus the
// local SE(3) increment used for pose refinement.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>
#include <functional>

#include "ellipose/error.hpp"
#include "ellipose/geometry.hpp"

namespace ellipose {

using Eigen::VectorXd;
using CostFunction = std::function<double(const VectorXd&)>;

struct OptimOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
  // Relative decrease below which the run counts as stalled.
  double cost_tolerance = 1e-10;
  // Central-difference step, relative: h_i = fd_step * max(1, |x_i|).
  double fd_step = 1e-6;
  double backtrack_factor = 0.5;
  double sufficient_decrease = 1e-4;
  int max_backtracks = 60;

  void Validate() const {
    if (!(gradient_tolerance > 0) || !(cost_tolerance > 0) || !(fd_step > 0) ||
        !(sufficient_decrease > 0) || !(backtrack_factor > 0) ||
        !(backtrack_factor < 1) || max_iterations < 0 || max_backtracks < 1) {
      throw Error(ErrorCode::kInvalidArgument, "invalid optimizer options");
    }
  }
};

enum class Termination {
  kGradientSmall,
  kCostStalled,
  kMaxIterations,
  kLineSearchFailed,
};

inline const char* TerminationName(Termination t) {
  switch (t) {
    case Termination::kGradientSmall: return "GradientSmall";
    case Termination::kCostStalled: return "CostStalled";
    case Termination::kMaxIterations: return "MaxIterations";
    case Termination::kLineSearchFailed: return "LineSearchFailed";
  }
  return "Unknown";
}

struct OptimResult {
  VectorXd x;
  double cost = 0.0;
  double initial_cost = 0.0;
  int iterations = 0;
  int evaluations = 0;
  Termination termination = Termination::kMaxIterations;
};

inline VectorXd NumericGradient(const CostFunction& f, const VectorXd& x,
                                double step, int* evaluations = nullptr) {
  VectorXd g(x.size());
  VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw Error(ErrorCode::kNonFiniteCost, "non-finite cost while differencing");
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  if (evaluations) *evaluations += static_cast<int>(2 * x.size());
  return g;
}

inline OptimResult Minimize(const CostFunction& f, const VectorXd& x0,
                            const OptimOptions& opts = {}) {
  opts.Validate();
  const Eigen::Index n = x0.size();
  OptimResult res;
  res.x = x0;
  res.cost = f(x0);
  res.evaluations = 1;
  res.initial_cost = res.cost;
  if (!std::isfinite(res.cost)) {
    throw Error(ErrorCode::kNonFiniteCost, "cost is not finite at the start point");
  }
  if (n == 0) {
    res.termination = Termination::kGradientSmall;
    return res;
  }

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  bool h_is_identity = true;
  VectorXd g = NumericGradient(f, res.x, opts.fd_step, &res.evaluations);

  for (res.iterations = 0; res.iterations < opts.max_iterations;) {
    const double g_norm = g.lpNorm<Eigen::Infinity>();
    if (g_norm == 0.0) {
      // Locally flat cost; no descent direction exists.
      res.termination = Termination::kCostStalled;
      return res;
    }
    if (g_norm <= opts.gradient_tolerance) {
      res.termination = Termination::kGradientSmall;
      return res;
    }

    VectorXd step;
    double f_new = res.cost;
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      VectorXd dir = -h_inv * g;
      double slope = g.dot(dir);
      if (!(slope < 0.0)) {
        h_inv.setIdentity();
        h_is_identity = true;
        dir = -g;
        slope = -g.squaredNorm();
      }
      // With an unscaled identity metric the gradient carries no length
      // information; try a unit step in the max norm instead.
      double alpha = h_is_identity ? 1.0 / g_norm : 1.0;
      for (int bt = 0; bt < opts.max_backtracks; ++bt) {
        const VectorXd trial = res.x + alpha * dir;
        const double ft = f(trial);
        ++res.evaluations;
        if (std::isfinite(ft) &&
            ft <= res.cost + opts.sufficient_decrease * alpha * slope) {
          step = alpha * dir;
          f_new = ft;
          accepted = true;
          break;
        }
        alpha *= opts.backtrack_factor;
      }
      if (!accepted) {
        if (h_is_identity) break;
        h_inv.setIdentity();
        h_is_identity = true;
      }
    }
    if (!accepted) {
      res.termination = Termination::kLineSearchFailed;
      return res;
    }

    ++res.iterations;
    const double f_old = res.cost;
    res.x += step;
    res.cost = f_new;
    if (f_old - f_new <= opts.cost_tolerance * std::abs(f_old)) {
      res.termination = Termination::kCostStalled;
      return res;
    }

    const VectorXd g_new = NumericGradient(f, res.x, opts.fd_step, &res.evaluations);
    const VectorXd y = g_new - g;
    const double sy = step.dot(y);
    if (sy > 1e-16 * step.norm() * y.norm() && sy > 0.0) {
      if (h_is_identity) {
        h_inv *= sy / y.squaredNorm();
        h_is_identity = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left =
          Eigen::MatrixXd::Identity(n, n) - rho * step * y.transpose();
      h_inv = left * h_inv * left.transpose() + rho * step * step.transpose();
      h_inv = 0.5 * (h_inv + h_inv.transpose());
    }
    g = g_new;
  }
  res.termination = Termination::kMaxIterations;
  return res;
}

// 6-vector: axis-angle rotation increment (rad) then translation increment.
using PoseParams = Eigen::Matrix<double, 6, 1>;

inline Matrix3d ExpSo3(const Vector3d& omega) {
  const double angle = omega.norm();
  if (angle == 0.0) return Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

// Nearest rotation in the Frobenius sense.
inline Matrix3d Reorthonormalize(const Matrix3d& r) {
  Eigen::JacobiSVD<Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0) {
    Matrix3d u = svd.matrixU();
    u.col(2) *= -1;
    out = u * svd.matrixV().transpose();
  }
  return out;
}

inline Camera ApplyPoseParams(const PoseParams& p, const Camera& base) {
  Matrix3d r = ExpSo3(p.head<3>()) * base.rotation();
  const double drift =
      (r * r.transpose() - Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (drift > 1e-9) r = Reorthonormalize(r);
  return Camera(base.intrinsics(), r, base.translation() + p.tail<3>(),
                base.image_size());
}

}  // namespace ellipose
