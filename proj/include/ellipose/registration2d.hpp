#pragma once

// 2D rigid registration of a (noisy) moving ellipse onto a reference by
// minimizing an ellipse-ellipse metric over (rotation, translation).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ellipose/metrics.hpp"
#include "ellipose/optim.hpp"
#include "ellipose/parallel.hpp"
#include "ellipose/random.hpp"

namespace ellipose {

struct NoiseSpec {
  double rotation_range_deg = 180.0;  // uniform in [-r, r]
  double translation_range = 60.0;    // px per axis, uniform in [-r, r]
  double min_scale = 0.83;            // per-axis anisotropic scale
  double max_scale = 1.2;
  bool enabled = true;
};

// Distribution of reference ellipses.
struct ReferenceSpec {
  double min_axis = 20.0;
  double max_axis = 80.0;
  ImageSize frame{640.0, 480.0};
  // Axis pairs are redrawn until a/b reaches this ratio. 1 keeps both axes
  // plain uniform draws.
  double min_aspect = 1.0;
};

// Point the registration rotation acts about. With the image origin the
// rotation also moves the center, so rotation errors leak into translation.
enum class RotationPivot { kEllipseCenter, kImageOrigin };

struct RegistrationProblem {
  Ellipse reference;
  Ellipse moving;
  // Rigid motion (radians, pixels) mapping moving back onto reference.
  double gt_rotation = 0.0;
  Vector2d gt_translation = Vector2d::Zero();
};

// Rotates about the pivot, then translates.
inline Ellipse TransformEllipse(const Ellipse& e, double theta, const Vector2d& t,
                                RotationPivot pivot) {
  const Vector2d p = pivot == RotationPivot::kEllipseCenter ? e.center() : Vector2d::Zero();
  return e.rotated_about(p, theta).translated(t);
}

inline RegistrationProblem GenerateProblem(Rng& rng, const NoiseSpec& noise,
                                           const ReferenceSpec& ref = {},
                                           RotationPivot pivot = RotationPivot::kEllipseCenter) {
  double a = 0.0;
  double b = 0.0;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    a = rng.Uniform(ref.min_axis, ref.max_axis);
    b = rng.Uniform(ref.min_axis, ref.max_axis);
    if (std::max(a, b) >= ref.min_aspect * std::min(a, b)) break;
  }
  const Vector2d center(rng.Uniform(0.0, ref.frame.width), rng.Uniform(0.0, ref.frame.height));
  const double angle = rng.Uniform(-kPi / 2, kPi / 2);
  const Ellipse reference(center, a, b, angle);

  const double rot_range = noise.rotation_range_deg * kPi / 180.0;
  const double theta = rng.Uniform(-rot_range, rot_range);
  const Vector2d t(rng.Uniform(-noise.translation_range, noise.translation_range),
                   rng.Uniform(-noise.translation_range, noise.translation_range));
  const double sx = rng.Uniform(noise.min_scale, noise.max_scale);
  const double sy = rng.Uniform(noise.min_scale, noise.max_scale);

  Ellipse moving = TransformEllipse(reference, theta, t, pivot);
  RegistrationProblem problem;
  problem.reference = reference;
  problem.gt_rotation = -theta;
  problem.gt_translation = pivot == RotationPivot::kEllipseCenter
                               ? Vector2d(-t)
                               : Vector2d(-(Rotation2d(-theta) * t));
  if (noise.enabled) {
    // Per-axis scaling in the ellipse frame. May swap the axes when a ~ b.
    moving = Ellipse(moving.center(), moving.a() * sx, moving.b() * sy, moving.angle());
  }
  problem.moving = moving;
  return problem;
}

struct RegistrationResult {
  double rotation = 0.0;
  Vector2d translation = Vector2d::Zero();
  OptimResult optim;
};

inline RegistrationResult Register(const RegistrationProblem& problem, MetricKind metric,
                                   const MetricContext& ctx = {}, const OptimOptions& opts = {},
                                   RotationPivot pivot = RotationPivot::kEllipseCenter) {
  auto cost = [&](const VectorXd& x) {
    const Ellipse moved = TransformEllipse(problem.moving, x[0], Vector2d(x[1], x[2]), pivot);
    return Distance(metric, moved, problem.reference, ctx);
  };
  RegistrationResult r;
  r.optim = Minimize(cost, VectorXd::Zero(3), opts);
  r.rotation = r.optim.x[0];
  r.translation = Vector2d(r.optim.x[1], r.optim.x[2]);
  return r;
}

// Angular difference of ellipse orientations, folded by their half-turn
// symmetry into [0, 90] degrees.
inline double RotationErrorDeg(double estimated, double truth) {
  const double d = std::fmod(std::abs(estimated - truth) * 180.0 / kPi, 180.0);
  return std::min(d, 180.0 - d);
}

// |t_hat - t_gt|.
inline double PositionError(const RegistrationProblem& p, const Vector2d& translation) {
  return (translation - p.gt_translation).norm();
}

struct TrialRecord {
  MetricKind metric = MetricKind::kLevelSet;
  int trial = 0;
  double pos_err_px = 0.0;
  double rot_err_deg = 0.0;
  bool converged = false;
  bool failed = false;
  // False when the reference is too close to a circle for rotation to be
  // observable; such trials are left out of the rotation mean.
  bool rotation_observable = true;
};

struct MetricSummary {
  MetricKind metric = MetricKind::kLevelSet;
  double mean_pos_err_px = 0.0;
  double mean_rot_err_deg = 0.0;
  int trials = 0;
  int rotation_trials = 0;
  int failures = 0;
};

struct BenchmarkConfig {
  int n_trials = 1000;
  std::vector<MetricKind> metrics = {MetricKind::kGIoU,          MetricKind::kBbox,
                                     MetricKind::kAlgebraicVec,  MetricKind::kAlgebraicFro,
                                     MetricKind::kWasserstein,   MetricKind::kBhattacharyya,
                                     MetricKind::kLevelSet};
  NoiseSpec noise;
  ReferenceSpec reference;
  RotationPivot pivot = RotationPivot::kEllipseCenter;
  std::uint64_t seed = 1;
  MetricContext ctx;
  OptimOptions optim;
  double circular_aspect = 1.05;
};

struct RegistrationReport {
  BenchmarkConfig config;
  std::vector<TrialRecord> trials;  // metric-major
  std::vector<MetricSummary> summaries;

  const MetricSummary& summary(MetricKind kind) const {
    for (const auto& s : summaries) {
      if (s.metric == kind) return s;
    }
    throw Error(ErrorCode::kInvalidArgument, "metric not in report");
  }
};

inline RegistrationProblem BenchmarkProblem(const BenchmarkConfig& cfg, int trial) {
  Rng rng = Rng::Stream(cfg.seed, static_cast<std::uint64_t>(trial));
  return GenerateProblem(rng, cfg.noise, cfg.reference, cfg.pivot);
}

inline RegistrationReport RunBenchmark(const BenchmarkConfig& cfg) {
  if (cfg.n_trials < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one trial");
  }
  MetricContext ctx = cfg.ctx;
  if (!ctx.image_size) ctx.image_size = cfg.reference.frame;

  const size_t n_metrics = cfg.metrics.size();
  const size_t n = static_cast<size_t>(cfg.n_trials);
  RegistrationReport report;
  report.config = cfg;
  report.trials.resize(n_metrics * n);

  ParallelFor(n, [&](size_t i) {
    const int trial = static_cast<int>(i);
    const RegistrationProblem problem = BenchmarkProblem(cfg, trial);
    const bool observable = problem.reference.a() >= cfg.circular_aspect * problem.reference.b();
    for (size_t m = 0; m < n_metrics; ++m) {
      TrialRecord rec;
      rec.metric = cfg.metrics[m];
      rec.trial = trial;
      rec.rotation_observable = observable;
      try {
        const RegistrationResult r = Register(problem, rec.metric, ctx, cfg.optim, cfg.pivot);
        rec.pos_err_px = PositionError(problem, r.translation);
        rec.rot_err_deg = RotationErrorDeg(r.rotation, problem.gt_rotation);
        rec.converged = r.optim.termination == Termination::kGradientSmall ||
                        r.optim.termination == Termination::kCostStalled;
      } catch (const Error&) {
        // Counted as a failure with the error of the untouched start point.
        rec.failed = true;
        rec.pos_err_px = PositionError(problem, Vector2d::Zero());
        rec.rot_err_deg = 90.0;
      }
      report.trials[m * n + i] = rec;
    }
  });

  for (size_t m = 0; m < n_metrics; ++m) {
    MetricSummary s;
    s.metric = cfg.metrics[m];
    for (size_t i = 0; i < n; ++i) {
      const TrialRecord& rec = report.trials[m * n + i];
      s.mean_pos_err_px += rec.pos_err_px;
      if (rec.rotation_observable) {
        s.mean_rot_err_deg += rec.rot_err_deg;
        ++s.rotation_trials;
      }
      s.failures += rec.failed;
      ++s.trials;
    }
    s.mean_pos_err_px /= s.trials;
    if (s.rotation_trials > 0) s.mean_rot_err_deg /= s.rotation_trials;
    report.summaries.push_back(s);
  }
  return report;
}

}  // namespace ellipose
