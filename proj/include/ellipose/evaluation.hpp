#pragma once

// Pose accuracy against ground truth: per-frame errors and localized-fraction
// curves, overall and per number of objects in the frame.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ellipose/pipeline.hpp"

namespace ellipose {

inline double PositionErrorMeters(const Camera& est, const Camera& truth) {
  return (est.center() - truth.center()).norm();
}

// Angle of the relative rotation, degrees. Same as acos((tr - 1) / 2) but
// accurate near zero.
inline double OrientationErrorDeg(const Matrix3d& est, const Matrix3d& truth) {
  const Matrix3d rel = est.transpose() * truth;
  const Vector3d skew(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * skew.norm(), 0.5 * (rel.trace() - 1.0)) * 180.0 / kPi;
}

struct FrameError {
  std::string frame_id;
  int n_objects = 0;
  bool estimated = false;
  double position_error = std::numeric_limits<double>::infinity();
  double orientation_error_deg = std::numeric_limits<double>::infinity();
};

struct Curve {
  std::vector<double> thresholds;
  std::vector<double> fractions;
};

struct EvalOptions {
  int n_thresholds = 100;
  double max_position = 1.0;      // meters
  double max_orientation = 30.0;  // degrees
  // Frames with at least this many objects share the last group.
  int max_group = 5;
};

struct EvalReport {
  std::vector<FrameError> frames;
  Curve position_curve;
  Curve orientation_curve;
  std::map<int, Curve> position_by_count;  // key: object count (capped)
  std::map<int, int> frames_by_count;
  double median_position = 0.0;
  double median_orientation = 0.0;
  EvalOptions options;
};

inline double Median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline double LocalizedFraction(const std::vector<double>& errors, double threshold) {
  if (errors.empty()) return 0.0;
  const auto n = std::count_if(errors.begin(), errors.end(),
                               [&](double e) { return e <= threshold; });
  return static_cast<double>(n) / static_cast<double>(errors.size());
}

inline Curve LocalizedCurve(const std::vector<double>& errors, double max_threshold, int n) {
  Curve c;
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? max_threshold : max_threshold * i / (n - 1);
    c.thresholds.push_back(t);
    c.fractions.push_back(LocalizedFraction(errors, t));
  }
  return c;
}

inline std::string GroupName(int key, int max_group) {
  return key >= max_group ? std::to_string(max_group) + "+" : std::to_string(key);
}

inline EvalReport Evaluate(const std::vector<FrameEstimate>& estimates,
                           const std::vector<FrameRecord>& ground_truth,
                           const EvalOptions& opts = {}) {
  if (opts.n_thresholds < 1 || !(opts.max_position > 0.0) || !(opts.max_orientation > 0.0) ||
      opts.max_group < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad evaluation options");
  }
  std::unordered_map<std::string, const FrameRecord*> by_id;
  for (const FrameRecord& f : ground_truth) {
    if (!f.gt_camera) {
      throw Error(ErrorCode::kFrameMismatch, "frame '" + f.id + "' has no ground-truth pose");
    }
    if (!by_id.emplace(f.id, &f).second) {
      throw Error(ErrorCode::kFrameMismatch, "duplicate ground-truth frame '" + f.id + "'");
    }
  }
  if (estimates.size() != ground_truth.size()) {
    throw Error(ErrorCode::kFrameMismatch,
                std::to_string(estimates.size()) + " estimates for " +
                    std::to_string(ground_truth.size()) + " ground-truth frames");
  }

  EvalReport report;
  report.options = opts;
  std::vector<double> pos;
  std::vector<double> rot;
  std::map<int, std::vector<double>> pos_groups;
  std::unordered_map<std::string, bool> seen;
  for (const FrameEstimate& est : estimates) {
    const auto it = by_id.find(est.frame_id);
    if (it == by_id.end() || seen[est.frame_id]) {
      throw Error(ErrorCode::kFrameMismatch, "estimate for unknown frame '" + est.frame_id + "'");
    }
    seen[est.frame_id] = true;
    const FrameRecord& gt = *it->second;
    FrameError fe;
    fe.frame_id = est.frame_id;
    fe.n_objects = static_cast<int>(gt.detections.size());
    fe.estimated = est.ok;
    if (est.ok) {
      fe.position_error = PositionErrorMeters(est.camera, *gt.gt_camera);
      fe.orientation_error_deg = OrientationErrorDeg(est.camera.rotation(), gt.gt_camera->rotation());
    }
    pos.push_back(fe.position_error);
    rot.push_back(fe.orientation_error_deg);
    pos_groups[std::min(fe.n_objects, opts.max_group)].push_back(fe.position_error);
    report.frames.push_back(fe);
  }
  report.position_curve = LocalizedCurve(pos, opts.max_position, opts.n_thresholds);
  report.orientation_curve = LocalizedCurve(rot, opts.max_orientation, opts.n_thresholds);
  for (const auto& [key, errs] : pos_groups) {
    report.position_by_count[key] = LocalizedCurve(errs, opts.max_position, opts.n_thresholds);
    report.frames_by_count[key] = static_cast<int>(errs.size());
  }
  report.median_position = Median(pos);
  report.median_orientation = Median(rot);
  return report;
}

}  // namespace ellipose
