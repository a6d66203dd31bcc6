#pragma once

// Per-frame pose estimation: RANSAC initialization, optional perturbation of
// the initial pose, optional refinement.

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "ellipose/parallel.hpp"
#include "ellipose/pose.hpp"
#include "ellipose/scene.hpp"

namespace ellipose {

struct PoseOptions {
  MetricKind metric = MetricKind::kLevelSet;
  bool refine = true;
  bool use_uncertainty = false;
  std::uint64_t seed = 0;
  double init_noise_pos = 0.0;  // meters
  double init_noise_rot = 0.0;  // degrees
  RansacOptions ransac;
  RefineOptions refinement;  // metric and use_uncertainty are taken from above
};

struct FrameEstimate {
  std::string frame_id;
  bool ok = false;
  std::string error;  // set when !ok
  Camera camera;
  Camera initial_camera;
  Association inliers;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int n_detections = 0;
  double refine_seconds = 0.0;  // not serialized
};

inline FrameEstimate EstimateFrame(const FrameRecord& frame, const SceneMap& map,
                                   const PoseOptions& opts, std::uint64_t frame_index) {
  FrameEstimate out;
  out.frame_id = frame.id;
  out.n_detections = static_cast<int>(frame.detections.size());
  RefineOptions ropts = opts.refinement;
  ropts.metric = opts.metric;
  ropts.use_uncertainty = opts.use_uncertainty;
  if (!ropts.ctx.image_size) ropts.ctx.image_size = frame.image_size;
  try {
    RansacOptions ransac = opts.ransac;
    ransac.seed = SplitMix64(opts.seed + 2 * frame_index);
    PoseEstimate est =
        RansacInit(frame.detections, map, frame.intrinsics, frame.image_size, ransac);
    if (opts.init_noise_pos > 0.0 || opts.init_noise_rot > 0.0) {
      Rng rng = Rng::Stream(opts.seed ^ 0x1417ULL, frame_index);
      est.camera = PerturbPose(est.camera, opts.init_noise_pos, opts.init_noise_rot, rng);
    }
    out.initial_camera = est.camera;
    if (opts.refine) {
      const auto start = std::chrono::steady_clock::now();
      est = Refine(est, frame.detections, map, ropts);
      out.refine_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } else {
      est.initial_cost = est.final_cost =
          AlignmentCost(est.camera, est.inliers, frame.detections, map, ropts);
    }
    out.camera = est.camera;
    out.inliers = est.inliers;
    out.initial_cost = est.initial_cost;
    out.final_cost = est.final_cost;
    out.ok = true;
  } catch (const Error& e) {
    // Data-dependent failures (too few objects, no pose, missing sigma) are
    // recorded per frame.
    if (e.code() == ErrorCode::kInvalidArgument) throw;
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

inline std::vector<FrameEstimate> EstimatePoses(const std::vector<FrameRecord>& frames,
                                                const SceneMap& map, const PoseOptions& opts) {
  std::vector<FrameEstimate> out(frames.size());
  ParallelFor(frames.size(),
              [&](size_t i) { out[i] = EstimateFrame(frames[i], map, opts, i); });
  return out;
}

}  // namespace ellipose
