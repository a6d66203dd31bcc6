#include <gtest/gtest.h>

#include "ellipose/evaluation.hpp"
#include "ellipose/pipeline.hpp"
#include "ellipose/scene.hpp"

namespace ellipose {
namespace {

SyntheticScene NoiselessScene(std::uint64_t seed, int n_frames) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_frames = n_frames;
  cfg.noise_enabled = false;
  return SynthGenerate(cfg);
}

PoseEstimate AtTruth(const FrameRecord& frame, const SceneMap& map) {
  PoseEstimate est;
  est.camera = *frame.gt_camera;
  for (size_t i = 0; i < frame.detections.size(); ++i) {
    est.inliers.push_back({static_cast<int>(i), frame.truth[i].object_id});
  }
  (void)map;
  return est;
}

double RotationGapDeg(const Camera& a, const Camera& b) {
  return OrientationErrorDeg(a.rotation(), b.rotation());
}

TEST(ReprojectionOverlap, Examples) {
  // Sphere of radius rho at depth 5 seen with f = 500 projects to a circle of
  // radius f * rho / sqrt(Z^2 - rho^2) = 100 px.
  Matrix3d k;
  k << 500, 0, 320, 0, 500, 240, 0, 0, 1;
  const Camera cam(k, Matrix3d::Identity(), Vector3d::Zero(), {640, 480});
  const double rho = 1.0 / std::sqrt(1.04);
  const DualQuadric q = DualQuadricFromEllipsoid(
      Ellipsoid(Vector3d(0, 0, 5), Vector3d::Constant(rho), Matrix3d::Identity()));
  EXPECT_NEAR(ReprojectionOverlap(Ellipse(320, 240, 100, 100, 0), cam, q), 1.0, 1e-9);
  // Unit circles one radius apart: lens area 2 pi / 3 - sqrt(3) / 2 over the
  // union gives 0.24303.
  EXPECT_NEAR(ReprojectionOverlap(Ellipse(420, 240, 100, 100, 0), cam, q), 0.24303, 2e-4);
  const Camera away(k, Eigen::AngleAxisd(kPi, Vector3d::UnitY()).toRotationMatrix(),
                    Vector3d::Zero(), {640, 480});
  EXPECT_EQ(ReprojectionOverlap(Ellipse(320, 240, 100, 100, 0), away, q), 0.0);
}

TEST(RansacInit, NoiselessSceneRecoversAssociation) {
  const SyntheticScene scene = NoiselessScene(11, 10);
  for (const FrameRecord& frame : scene.frames) {
    const PoseEstimate est =
        RansacInit(frame.detections, scene.map, frame.intrinsics, frame.image_size, {});
    ASSERT_EQ(est.inliers.size(), frame.detections.size());
    for (const AssociationPair& p : est.inliers) {
      EXPECT_EQ(p.object_id, frame.truth[p.detection].object_id);
    }
    // Centers of projected ellipses are not projected centers, so the pose is
    // only close.
    EXPECT_LT(PositionErrorMeters(est.camera, *frame.gt_camera), 0.1);
    EXPECT_LT(RotationGapDeg(est.camera, *frame.gt_camera), 2.0);
  }
}

TEST(RansacInit, DecoyWithDuplicatedLabelIsExcluded) {
  SyntheticScene scene = NoiselessScene(12, 6);
  // The decoy shares the label of the first object and sits outside the
  // scene volume, so it never produces a detection of its own.
  MapObject decoy = scene.map.objects[0];
  decoy.id = "decoy";
  decoy.ellipsoid = Ellipsoid(decoy.ellipsoid.center() + Vector3d(0, 0, 2.5),
                              decoy.ellipsoid.semi_axes(), decoy.ellipsoid.rotation());
  scene.map.objects.push_back(decoy);
  for (const FrameRecord& frame : scene.frames) {
    const PoseEstimate est =
        RansacInit(frame.detections, scene.map, frame.intrinsics, frame.image_size, {});
    for (const AssociationPair& p : est.inliers) {
      EXPECT_NE(p.object_id, "decoy");
      EXPECT_EQ(p.object_id, frame.truth[p.detection].object_id);
    }
  }
}

TEST(RansacInit, TwoDetectionsAreInsufficient) {
  const SyntheticScene scene = NoiselessScene(13, 1);
  std::vector<Detection> two(scene.frames[0].detections.begin(),
                             scene.frames[0].detections.begin() + 2);
  try {
    RansacInit(two, scene.map, scene.frames[0].intrinsics, scene.frames[0].image_size, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientObjects);
  }
}

TEST(RansacInit, InliersAreLabelConsistentAndOverlapping) {
  SynthConfig cfg;
  cfg.seed = 14;
  cfg.n_frames = 3;
  cfg.n_labels = 3;
  const SyntheticScene scene = SynthGenerate(cfg);
  for (const FrameRecord& frame : scene.frames) {
    const PoseEstimate est =
        RansacInit(frame.detections, scene.map, frame.intrinsics, frame.image_size, {});
    const Camera& cam = est.camera;
    for (const AssociationPair& p : est.inliers) {
      const MapObject& o = scene.map.objects[scene.map.IndexOf(p.object_id)];
      EXPECT_EQ(o.label, frame.detections[p.detection].label);
      EXPECT_GE(ReprojectionOverlap(frame.detections[p.detection].ellipse, cam,
                                    DualQuadricFromEllipsoid(o.ellipsoid)),
                0.2);
    }
  }
}

TEST(RansacInit, Deterministic) {
  SynthConfig cfg;
  cfg.seed = 15;
  cfg.n_frames = 3;
  cfg.n_labels = 2;
  const SyntheticScene scene = SynthGenerate(cfg);
  RansacOptions opts;
  opts.seed = 99;
  opts.max_triples = 50;  // forces sampling
  for (const FrameRecord& frame : scene.frames) {
    const PoseEstimate a =
        RansacInit(frame.detections, scene.map, frame.intrinsics, frame.image_size, opts);
    const PoseEstimate b =
        RansacInit(frame.detections, scene.map, frame.intrinsics, frame.image_size, opts);
    EXPECT_EQ(a.camera.rotation(), b.camera.rotation());
    EXPECT_EQ(a.camera.translation(), b.camera.translation());
    EXPECT_EQ(a.inliers.size(), b.inliers.size());
  }
}

TEST(Refine, GroundTruthStaysPut) {
  const SyntheticScene scene = NoiselessScene(16, 3);
  for (const FrameRecord& frame : scene.frames) {
    const PoseEstimate est = Refine(AtTruth(frame, scene.map), frame.detections, scene.map, {});
    EXPECT_LT(PositionErrorMeters(est.camera, *frame.gt_camera), 1e-6);
    EXPECT_LT(RotationGapDeg(est.camera, *frame.gt_camera), 1e-6 * 180.0 / kPi);
    EXPECT_LT(est.final_cost, 1e-12);
    EXPECT_LE(est.final_cost, est.initial_cost);
  }
}

TEST(Refine, EveryMetricKeepsTheExactPose) {
  const SyntheticScene scene = NoiselessScene(17, 1);
  const FrameRecord& frame = scene.frames[0];
  for (MetricKind kind : kAllMetrics) {
    RefineOptions opts;
    opts.metric = kind;
    opts.ctx.image_size = frame.image_size;
    const PoseEstimate est = Refine(AtTruth(frame, scene.map), frame.detections, scene.map, opts);
    EXPECT_LT(PositionErrorMeters(est.camera, *frame.gt_camera), 1e-5) << MetricName(kind);
    EXPECT_LT(RotationGapDeg(est.camera, *frame.gt_camera), 1e-5 * 180.0 / kPi)
        << MetricName(kind);
  }
}

TEST(Refine, RecoversFromPerturbedStartWithoutNoise) {
  const SyntheticScene scene = NoiselessScene(18, 5);
  Rng rng(3);
  for (const FrameRecord& frame : scene.frames) {
    PoseEstimate init = AtTruth(frame, scene.map);
    init.camera = PerturbPose(init.camera, 0.1, 3.0, rng);
    const PoseEstimate est = Refine(init, frame.detections, scene.map, {});
    EXPECT_LT(PositionErrorMeters(est.camera, *frame.gt_camera), 1e-4);
    EXPECT_LE(est.final_cost, est.initial_cost);
  }
}

TEST(Refine, NeverIncreasesCost) {
  SynthConfig cfg;
  cfg.seed = 19;
  cfg.n_frames = 6;
  const SyntheticScene scene = SynthGenerate(cfg);
  for (const FrameRecord& frame : scene.frames) {
    const PoseEstimate init =
        RansacInit(frame.detections, scene.map, frame.intrinsics, frame.image_size, {});
    for (bool weighted : {false, true}) {
      RefineOptions opts;
      opts.use_uncertainty = weighted;
      const PoseEstimate est = Refine(init, frame.detections, scene.map, opts);
      EXPECT_LE(est.final_cost, est.initial_cost);
      EXPECT_DOUBLE_EQ(est.initial_cost,
                       AlignmentCost(init.camera, init.inliers, frame.detections, scene.map, opts));
    }
  }
}

TEST(Refine, CommonSigmaScaleKeepsTheArgmin) {
  SynthConfig cfg;
  cfg.seed = 20;
  cfg.n_frames = 4;
  const SyntheticScene scene = SynthGenerate(cfg);
  RefineOptions opts;
  opts.use_uncertainty = true;
  for (const FrameRecord& frame : scene.frames) {
    const PoseEstimate init =
        RansacInit(frame.detections, scene.map, frame.intrinsics, frame.image_size, {});
    std::vector<Detection> scaled = frame.detections;
    for (Detection& d : scaled) d.sigma = *d.sigma * 7.0;
    const PoseEstimate a = Refine(init, frame.detections, scene.map, opts);
    const PoseEstimate b = Refine(init, scaled, scene.map, opts);
    EXPECT_LT((a.camera.center() - b.camera.center()).norm(), 1e-4);
    EXPECT_LT(RotationGapDeg(a.camera, b.camera), 1e-2);
    EXPECT_NEAR(a.final_cost, 7.0 * b.final_cost, 1e-6 * a.final_cost);
  }
}

TEST(Refine, MissingSigmaIsReported) {
  const SyntheticScene scene = NoiselessScene(21, 1);
  const FrameRecord& frame = scene.frames[0];
  std::vector<Detection> dets = frame.detections;
  dets[1].sigma.reset();
  RefineOptions opts;
  opts.use_uncertainty = true;
  try {
    Refine(AtTruth(frame, scene.map), dets, scene.map, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingSigma);
  }
}

TEST(Refine, TwoInliersAreFlagged) {
  const SyntheticScene scene = NoiselessScene(22, 1);
  PoseEstimate init = AtTruth(scene.frames[0], scene.map);
  init.inliers.resize(2);
  const PoseEstimate est = Refine(init, scene.frames[0].detections, scene.map, {});
  EXPECT_TRUE(est.underconstrained);
  init.inliers.resize(1);
  EXPECT_THROW(Refine(init, scene.frames[0].detections, scene.map, {}), Error);
}

TEST(Refine, DegenerateProbeIsPenalized) {
  const SyntheticScene scene = NoiselessScene(23, 1);
  const FrameRecord& frame = scene.frames[0];
  const PoseEstimate truth = AtTruth(frame, scene.map);
  // Camera moved into the middle of the map: some objects fall behind it.
  const Camera inside(frame.intrinsics, frame.gt_camera->rotation(),
                      -frame.gt_camera->rotation() * scene.map.objects[0].ellipsoid.center(),
                      frame.image_size);
  EXPECT_EQ(AlignmentCost(inside, truth.inliers, frame.detections, scene.map), 1e9);
}

TEST(EstimatePoses, IndependentOfThreadCount) {
  SynthConfig cfg;
  cfg.seed = 24;
  cfg.n_frames = 6;
  const SyntheticScene scene = SynthGenerate(cfg);
  PoseOptions opts;
  opts.seed = 5;
  opts.init_noise_pos = 0.1;
  opts.init_noise_rot = 5.0;
  setenv("ELLIPOSE_THREADS", "1", 1);
  const std::vector<FrameEstimate> a = EstimatePoses(scene.frames, scene.map, opts);
  setenv("ELLIPOSE_THREADS", "4", 1);
  const std::vector<FrameEstimate> b = EstimatePoses(scene.frames, scene.map, opts);
  unsetenv("ELLIPOSE_THREADS");
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].ok, b[i].ok);
    EXPECT_EQ(a[i].camera.translation(), b[i].camera.translation());
    EXPECT_EQ(a[i].camera.rotation(), b[i].camera.rotation());
  }
}

TEST(EstimatePoses, FailuresAreRecordedPerFrame) {
  SyntheticScene scene = NoiselessScene(25, 2);
  scene.frames[1].detections.resize(2);
  scene.frames[1].truth.resize(2);
  const std::vector<FrameEstimate> out = EstimatePoses(scene.frames, scene.map, {});
  EXPECT_TRUE(out[0].ok);
  EXPECT_FALSE(out[1].ok);
  EXPECT_FALSE(out[1].error.empty());
}

}  // namespace
}  // namespace ellipose
