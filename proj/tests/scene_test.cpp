#include <gtest/gtest.h>

#include <numeric>

#include "ellipose/evaluation.hpp"
#include "ellipose/scene.hpp"

namespace ellipose {
namespace {

Eigen::Matrix<double, 5, 1> Params(const Ellipse& e) {
  Eigen::Matrix<double, 5, 1> v;
  v << e.center().x(), e.center().y(), e.a(), e.b(), e.angle();
  return v;
}

std::vector<double> Ranks(const std::vector<double>& v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return rank;
}

double Spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::vector<double> rx = Ranks(x);
  const std::vector<double> ry = Ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n - 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  return sxy / std::sqrt(sxx * syy);
}

TEST(Synth, ZeroNoiseDetectionsAreExactProjections) {
  SynthConfig cfg;
  cfg.seed = 1;
  cfg.n_frames = 20;
  cfg.noise_enabled = false;
  const SyntheticScene scene = SynthGenerate(cfg);
  for (const FrameRecord& frame : scene.frames) {
    ASSERT_TRUE(frame.gt_camera);
    ASSERT_EQ(frame.truth.size(), frame.detections.size());
    ASSERT_GE(frame.detections.size(), 3u);
    for (size_t i = 0; i < frame.detections.size(); ++i) {
      const MapObject& o = scene.map.objects[scene.map.IndexOf(frame.truth[i].object_id)];
      const Ellipse p =
          ProjectEllipsoidToEllipse(*frame.gt_camera, DualQuadricFromEllipsoid(o.ellipsoid));
      EXPECT_EQ(Params(frame.detections[i].ellipse), Params(p));
      EXPECT_EQ(frame.detections[i].label, o.label);
      EXPECT_EQ(*frame.detections[i].sigma, 1.0);
    }
  }
}

TEST(Synth, MapObjectsDoNotOverlap) {
  SynthConfig cfg;
  cfg.seed = 2;
  cfg.n_frames = 1;
  cfg.n_objects = 12;
  const SyntheticScene scene = SynthGenerate(cfg);
  ASSERT_EQ(scene.map.objects.size(), 12u);
  for (size_t i = 0; i < scene.map.objects.size(); ++i) {
    for (size_t j = i + 1; j < scene.map.objects.size(); ++j) {
      const Ellipsoid& a = scene.map.objects[i].ellipsoid;
      const Ellipsoid& b = scene.map.objects[j].ellipsoid;
      // Bounding spheres keep apart.
      EXPECT_GT((a.center() - b.center()).norm(),
                a.semi_axes().maxCoeff() + b.semi_axes().maxCoeff());
    }
  }
}

TEST(Synth, SameSeedSameScene) {
  SynthConfig cfg;
  cfg.seed = 3;
  cfg.n_frames = 5;
  cfg.partial_rate = 0.5;
  const SyntheticScene a = SynthGenerate(cfg);
  const SyntheticScene b = SynthGenerate(cfg);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (size_t f = 0; f < a.frames.size(); ++f) {
    ASSERT_EQ(a.frames[f].detections.size(), b.frames[f].detections.size());
    for (size_t i = 0; i < a.frames[f].detections.size(); ++i) {
      EXPECT_EQ(Params(a.frames[f].detections[i].ellipse),
                Params(b.frames[f].detections[i].ellipse));
    }
  }
  cfg.seed = 4;
  const SyntheticScene c = SynthGenerate(cfg);
  EXPECT_NE(a.frames[0].gt_camera->translation(), c.frames[0].gt_camera->translation());
}

TEST(Synth, MissingSeedRejected) {
  SynthConfig cfg;
  EXPECT_THROW(SynthGenerate(cfg), Error);
}

TEST(Synth, PartialRateMatchesBinomial) {
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.n_frames = 1000;
  cfg.partial_rate = 0.3;
  const SyntheticScene scene = SynthGenerate(cfg);
  int with_truncated = 0;
  for (const FrameRecord& frame : scene.frames) {
    with_truncated += std::any_of(frame.truth.begin(), frame.truth.end(),
                                  [](const DetectionTruth& t) { return t.truncated; });
  }
  // sd = sqrt(1000 * 0.3 * 0.7) = 14.5 frames, so +-30 is about two sd.
  EXPECT_NEAR(with_truncated, 300, 30);
}

TEST(Synth, SideCutTruncation) {
  SynthConfig cfg;
  cfg.seed = 6;
  cfg.n_frames = 50;
  cfg.partial_rate = 1.0;
  cfg.truncation = TruncationModel::kSideCut;
  cfg.noise_enabled = false;
  const SyntheticScene scene = SynthGenerate(cfg);
  for (const FrameRecord& frame : scene.frames) {
    int n = 0;
    for (size_t i = 0; i < frame.truth.size(); ++i) {
      if (!frame.truth[i].truncated) continue;
      ++n;
      EXPECT_GT(*frame.detections[i].sigma, 1.0);
    }
    EXPECT_EQ(n, 1);
  }
}

TEST(Synth, SigmaTracksResidualAtTruth) {
  SynthConfig cfg;
  cfg.seed = 7;
  cfg.n_frames = 200;
  const SyntheticScene scene = SynthGenerate(cfg);
  std::vector<double> sigma;
  std::vector<double> residual;
  for (const FrameRecord& frame : scene.frames) {
    for (size_t i = 0; i < frame.detections.size(); ++i) {
      const MapObject& o = scene.map.objects[scene.map.IndexOf(frame.truth[i].object_id)];
      const Ellipse p =
          ProjectEllipsoidToEllipse(*frame.gt_camera, DualQuadricFromEllipsoid(o.ellipsoid));
      sigma.push_back(*frame.detections[i].sigma);
      residual.push_back(LevelSetDistance(frame.detections[i].ellipse, p));
    }
  }
  EXPECT_GT(Spearman(sigma, residual), 0.8);
}

TEST(CorruptDetection, ShrinksAndRaisesSigma) {
  SynthConfig cfg;
  cfg.seed = 8;
  cfg.n_frames = 20;
  SyntheticScene scene = SynthGenerate(cfg);
  Rng rng(1);
  for (FrameRecord& frame : scene.frames) {
    const std::vector<Detection> before = frame.detections;
    const int idx = CorruptDetection(frame, cfg, rng);
    const Ellipse& e = frame.detections[idx].ellipse;
    EXPECT_LT(e.a() * e.b(), 0.6 * before[idx].ellipse.a() * before[idx].ellipse.b());
    EXPECT_GT(*frame.detections[idx].sigma, *before[idx].sigma);
    EXPECT_TRUE(frame.truth[idx].truncated);
  }
}

TEST(PerturbPose, ZeroNoiseIsIdentity) {
  SynthConfig cfg;
  cfg.seed = 9;
  cfg.n_frames = 1;
  const Camera cam = *SynthGenerate(cfg).frames[0].gt_camera;
  Rng rng(2);
  const Camera same = PerturbPose(cam, 0.0, 0.0, rng);
  EXPECT_LT((same.rotation() - cam.rotation()).norm(), 1e-15);
  EXPECT_LT((same.translation() - cam.translation()).norm(), 1e-12);
}

TEST(PerturbPose, ExactMagnitudes) {
  SynthConfig cfg;
  cfg.seed = 10;
  cfg.n_frames = 1;
  const Camera cam = *SynthGenerate(cfg).frames[0].gt_camera;
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Camera moved = PerturbPose(cam, 0.1, 0.0, rng);
    EXPECT_NEAR(PositionErrorMeters(moved, cam), 0.1, 1e-12);
    EXPECT_NEAR(OrientationErrorDeg(moved.rotation(), cam.rotation()), 0.0, 1e-6);
    const Camera turned = PerturbPose(cam, 0.0, 15.0, rng);
    EXPECT_NEAR(PositionErrorMeters(turned, cam), 0.0, 1e-12);
    EXPECT_NEAR(OrientationErrorDeg(turned.rotation(), cam.rotation()), 15.0, 1e-9);
  }
}

TEST(PerturbPose, OffsetDirectionIsIsotropic) {
  const Camera cam(Matrix3d::Identity(), Matrix3d::Identity(), Vector3d::Zero());
  Rng rng(4);
  std::array<int, 8> octant{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Vector3d d = PerturbPose(cam, 1.0, 0.0, rng).center();
    ++octant[(d.x() > 0) + 2 * (d.y() > 0) + 4 * (d.z() > 0)];
  }
  double chi2 = 0.0;
  for (int c : octant) chi2 += (c - n / 8.0) * (c - n / 8.0) / (n / 8.0);
  EXPECT_LT(chi2, 24.322);  // 7 dof, p = 0.001
}

TEST(Evaluate, PerfectEstimates) {
  SynthConfig cfg;
  cfg.seed = 11;
  cfg.n_frames = 10;
  const SyntheticScene scene = SynthGenerate(cfg);
  std::vector<FrameEstimate> est;
  for (const FrameRecord& f : scene.frames) {
    FrameEstimate e;
    e.frame_id = f.id;
    e.ok = true;
    e.camera = *f.gt_camera;
    est.push_back(e);
  }
  const EvalReport r = Evaluate(est, scene.frames);
  EXPECT_EQ(r.median_position, 0.0);
  EXPECT_EQ(r.position_curve.thresholds.size(), 100u);
  for (double v : r.position_curve.fractions) EXPECT_EQ(v, 1.0);
  for (double v : r.orientation_curve.fractions) EXPECT_EQ(v, 1.0);
}

TEST(Evaluate, TenDegreeRotation) {
  SynthConfig cfg;
  cfg.seed = 12;
  cfg.n_frames = 3;
  const SyntheticScene scene = SynthGenerate(cfg);
  std::vector<FrameEstimate> est;
  Rng rng(5);
  for (const FrameRecord& f : scene.frames) {
    FrameEstimate e;
    e.frame_id = f.id;
    e.ok = true;
    const Matrix3d r =
        Eigen::AngleAxisd(10.0 * kPi / 180.0, rng.UnitVector()).toRotationMatrix() *
        f.gt_camera->rotation();
    // Keep the center in place.
    e.camera = Camera(f.intrinsics, r, -r * f.gt_camera->center());
    est.push_back(e);
  }
  const EvalReport r = Evaluate(est, scene.frames);
  for (const FrameError& fe : r.frames) {
    EXPECT_NEAR(fe.orientation_error_deg, 10.0, 1e-9);
    EXPECT_NEAR(fe.position_error, 0.0, 1e-12);
  }
}

TEST(Evaluate, FarPosesAreNotLocalized) {
  SynthConfig cfg;
  cfg.seed = 13;
  cfg.n_frames = 20;
  const SyntheticScene scene = SynthGenerate(cfg);
  std::vector<FrameEstimate> est;
  Rng rng(6);
  for (const FrameRecord& f : scene.frames) {
    FrameEstimate e;
    e.frame_id = f.id;
    e.ok = true;
    e.camera = PerturbPose(*f.gt_camera, 5.0, 90.0, rng);
    est.push_back(e);
  }
  est[0].ok = false;
  const EvalReport r = Evaluate(est, scene.frames);
  EXPECT_EQ(r.position_curve.fractions[10], 0.0);
  EXPECT_EQ(r.orientation_curve.fractions[10], 0.0);
  EXPECT_TRUE(std::isinf(r.frames[0].position_error));
}

TEST(Evaluate, CurvesMonotoneAndGroupsPartition) {
  SynthConfig cfg;
  cfg.seed = 14;
  cfg.n_frames = 40;
  cfg.n_objects = 6;
  const SyntheticScene scene = SynthGenerate(cfg);
  std::vector<FrameEstimate> est;
  Rng rng(7);
  for (const FrameRecord& f : scene.frames) {
    FrameEstimate e;
    e.frame_id = f.id;
    e.ok = true;
    e.camera = PerturbPose(*f.gt_camera, rng.Uniform(0.0, 1.2), rng.Uniform(0.0, 40.0), rng);
    est.push_back(e);
  }
  const EvalReport r = Evaluate(est, scene.frames);
  for (size_t i = 1; i < r.position_curve.fractions.size(); ++i) {
    EXPECT_GE(r.position_curve.fractions[i], r.position_curve.fractions[i - 1]);
    EXPECT_GE(r.orientation_curve.fractions[i], r.orientation_curve.fractions[i - 1]);
  }
  int total = 0;
  for (const auto& [key, n] : r.frames_by_count) total += n;
  EXPECT_EQ(total, 40);
}

TEST(Evaluate, FrameMismatch) {
  SynthConfig cfg;
  cfg.seed = 15;
  cfg.n_frames = 2;
  const SyntheticScene scene = SynthGenerate(cfg);
  FrameEstimate e;
  e.frame_id = "nope";
  e.camera = *scene.frames[0].gt_camera;
  try {
    Evaluate({e, e}, scene.frames);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kFrameMismatch);
  }
  EXPECT_THROW(Evaluate({e}, scene.frames), Error);
}

TEST(Median, EvenAndOdd) {
  EXPECT_EQ(Median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(Median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_TRUE(std::isnan(Median({})));
}

}  // namespace
}  // namespace ellipose
