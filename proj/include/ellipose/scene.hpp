#pragma once

// Synthetic scenes: ellipsoid maps, orbiting cameras and noisy, sometimes
// truncated, ellipse detections with a matching uncertainty.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "ellipose/pose.hpp"
#include "ellipose/random.hpp"

namespace ellipose {

// Ground-truth bookkeeping for one detection.
struct DetectionTruth {
  std::string object_id;
  bool truncated = false;
  double distortion = 0.0;  // injected distortion magnitude
};

struct FrameRecord {
  std::string id;
  Matrix3d intrinsics = Matrix3d::Identity();
  ImageSize image_size;
  std::vector<Detection> detections;
  std::optional<Camera> gt_camera;
  std::vector<DetectionTruth> truth;  // empty or parallel to detections
};

enum class TruncationModel {
  // Object crossing the image border: its box is clipped to the image.
  kImageBorder,
  // Box cut on a random side, as an occluder would.
  kSideCut,
};

struct SynthConfig {
  int n_objects = 8;
  int n_frames = 100;
  std::optional<std::uint64_t> seed;
  // Distinct labels cycled over objects; 0 gives every object its own.
  int n_labels = 0;

  // Map volume (meters) and object semi-axes.
  Vector3d volume_min{-1.5, -1.5, 0.0};
  Vector3d volume_max{1.5, 1.5, 1.0};
  double min_semi_axis = 0.1;
  double max_semi_axis = 0.35;
  double placement_margin = 0.05;

  // Intrinsics.
  double focal = 525.0;
  ImageSize image_size{640.0, 480.0};

  // Camera orbit around the object centroid.
  double orbit_min_radius = 2.5;
  double orbit_max_radius = 4.0;
  double orbit_min_height = 0.3;
  double orbit_max_height = 1.8;
  double look_at_jitter = 0.3;  // meters
  double roll_jitter_deg = 5.0;

  // Detection noise.
  bool noise_enabled = true;
  double center_jitter_px = 2.0;  // per-axis standard deviation
  // Optional extra center jitter along each ellipse axis, as a fraction of
  // that semi-axis (standard deviation).
  double center_jitter_rel = 0.0;
  double min_scale = 0.83;
  double max_scale = 1.2;
  double angle_jitter_deg = 2.0;  // standard deviation
  double min_axis_px = 4.0;       // smaller projections are not detected

  // Partial visibility.
  double partial_rate = 0.0;  // probability a frame holds one truncated detection
  TruncationModel truncation = TruncationModel::kImageBorder;
  double min_visible_fraction = 0.35;  // of the projected box area
  double max_visible_fraction = 0.9;
  double truncation_shrink = 1.0;  // extra shrink of the truncated box

  // sigma = 1 + kappa * distortion.
  double sigma_kappa = 10.0;
  bool emit_sigma = true;

  int min_detections = 3;

  // Initial-pose noise used by convergence studies.
  double init_noise_pos = 0.0;  // meters
  double init_noise_rot = 0.0;  // degrees

  void Validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
    if (!seed) fail("synth config needs a seed");
    if (n_objects < 3) fail("need at least three objects");
    if (n_frames < 1) fail("need at least one frame");
    if (n_labels < 0) fail("n_labels must be non-negative");
    if (!(partial_rate >= 0.0 && partial_rate <= 1.0)) fail("partial_rate must lie in [0,1]");
    if (!(min_semi_axis > 0.0 && max_semi_axis >= min_semi_axis)) fail("bad semi-axis range");
    if (!(volume_max.array() > volume_min.array()).all()) fail("empty placement volume");
    if (!(focal > 0.0 && image_size.width > 0.0 && image_size.height > 0.0)) {
      fail("bad intrinsics");
    }
    if (!(orbit_min_radius > 0.0 && orbit_max_radius >= orbit_min_radius)) fail("bad orbit");
    if (!(min_scale > 0.0 && max_scale >= min_scale)) fail("bad scale range");
    if (!(center_jitter_px >= 0.0 && center_jitter_rel >= 0.0 && angle_jitter_deg >= 0.0)) {
      fail("negative noise");
    }
    if (!(min_visible_fraction > 0.0 && max_visible_fraction <= 1.0 &&
          min_visible_fraction < max_visible_fraction)) {
      fail("bad visible fraction range");
    }
    if (!(truncation_shrink > 0.0 && truncation_shrink <= 1.0)) fail("shrink must be in (0,1]");
    if (!(sigma_kappa >= 0.0)) fail("sigma_kappa must be non-negative");
    if (min_detections < 3) fail("min_detections must be at least 3");
    if (!(init_noise_pos >= 0.0 && init_noise_rot >= 0.0)) fail("negative init noise");
  }

  Matrix3d Intrinsics() const {
    Matrix3d k;
    k << focal, 0.0, image_size.width / 2.0, 0.0, focal, image_size.height / 2.0, 0.0, 0.0, 1.0;
    return k;
  }
};

inline std::string ObjectLabel(int index, int n_labels) {
  static const char* const kNames[] = {"chair", "table",  "monitor", "lamp",  "plant",
                                       "sofa",  "bottle", "cup",     "book",  "clock",
                                       "vase",  "laptop", "keyboard", "bowl", "bench"};
  constexpr int kCount = static_cast<int>(sizeof(kNames) / sizeof(kNames[0]));
  const int label = n_labels > 0 ? index % n_labels : index;
  if (label < kCount) return kNames[label];
  return "object" + std::to_string(label);
}

inline SceneMap GenerateMap(const SynthConfig& cfg, Rng& rng) {
  SceneMap map;
  for (int i = 0; i < cfg.n_objects; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      const Vector3d axes(rng.Uniform(cfg.min_semi_axis, cfg.max_semi_axis),
                          rng.Uniform(cfg.min_semi_axis, cfg.max_semi_axis),
                          rng.Uniform(cfg.min_semi_axis, cfg.max_semi_axis));
      const double radius = axes.maxCoeff();
      Vector3d center;
      for (int d = 0; d < 3; ++d) {
        const double lo = cfg.volume_min[d] + radius;
        const double hi = cfg.volume_max[d] - radius;
        center[d] = lo < hi ? rng.Uniform(lo, hi) : 0.5 * (cfg.volume_min[d] + cfg.volume_max[d]);
      }
      // Yaw about the vertical plus a small tilt.
      const Matrix3d rot =
          (Eigen::AngleAxisd(rng.Uniform(-kPi, kPi), Vector3d::UnitZ()) *
           Eigen::AngleAxisd(rng.Uniform(-0.2, 0.2), rng.UnitVector()))
              .toRotationMatrix();
      placed = true;
      for (const MapObject& o : map.objects) {
        const double other = o.ellipsoid.semi_axes().maxCoeff();
        if ((o.ellipsoid.center() - center).norm() < radius + other + cfg.placement_margin) {
          placed = false;
          break;
        }
      }
      if (placed) {
        char id[32];
        std::snprintf(id, sizeof(id), "obj%03d", i);
        map.objects.push_back({id, ObjectLabel(i, cfg.n_labels), Ellipsoid(center, axes, rot)});
      }
    }
    if (!placed) {
      throw Error(ErrorCode::kPlacementFailure,
                  "could not place object " + std::to_string(i) + " without overlap");
    }
  }
  return map;
}

// Camera at `center` looking at `target` with z up in the world and y down in
// the image.
inline Matrix3d LookAtRotation(const Vector3d& center, const Vector3d& target, double roll) {
  const Vector3d z = (target - center).normalized();
  Vector3d x = z.cross(Vector3d::UnitZ());
  if (x.norm() < 1e-9) x = Vector3d::UnitX();
  x.normalize();
  const Vector3d y = z.cross(x);
  Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return Eigen::AngleAxisd(roll, Vector3d::UnitZ()).toRotationMatrix() * r;
}

// Camera with the same intrinsics whose center moves by `pos_noise` meters in
// a uniform direction and whose orientation turns by `rot_noise_deg` about a
// uniform axis.
inline Camera PerturbPose(const Camera& cam, double pos_noise, double rot_noise_deg, Rng& rng) {
  if (!(pos_noise >= 0.0 && rot_noise_deg >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pose noise must be non-negative");
  }
  const Vector3d offset = pos_noise * rng.UnitVector();
  const Vector3d axis = rng.UnitVector();
  const Matrix3d r =
      Reorthonormalize(Eigen::AngleAxisd(rot_noise_deg * kPi / 180.0, axis).toRotationMatrix() *
                       cam.rotation());
  const Vector3d c = cam.center() + offset;
  return Camera(cam.intrinsics(), r, -r * c, cam.image_size());
}

namespace detail {

inline double BoxArea(const BBox& b) {
  return std::max(0.0, b.width()) * std::max(0.0, b.height());
}

inline bool BoxInside(const BBox& b, ImageSize s) {
  return b.min_x >= 0.0 && b.min_y >= 0.0 && b.max_x <= s.width && b.max_y <= s.height;
}

// Shrinks a box about its center.
inline BBox ShrinkBox(const BBox& b, double factor) {
  const Vector2d c = b.center();
  const double hw = 0.5 * b.width() * factor;
  const double hh = 0.5 * b.height() * factor;
  return {c.x() - hw, c.y() - hh, c.x() + hw, c.y() + hh};
}

}  // namespace detail

// Removes `fraction` of the box from one side.
inline BBox CutBox(const BBox& b, int side, double fraction) {
  BBox out = b;
  switch (side & 3) {
    case 0: out.min_x += fraction * b.width(); break;
    case 1: out.max_x -= fraction * b.width(); break;
    case 2: out.min_y += fraction * b.height(); break;
    default: out.max_y -= fraction * b.height(); break;
  }
  return out;
}

// Applies the configured noise to a detection ellipse.
inline Ellipse NoisyEllipse(const Ellipse& e, const SynthConfig& cfg, Rng& rng) {
  const double sa = rng.Uniform(cfg.min_scale, cfg.max_scale);
  const double sb = rng.Uniform(cfg.min_scale, cfg.max_scale);
  Vector2d jitter(cfg.center_jitter_px * rng.Normal(), cfg.center_jitter_px * rng.Normal());
  jitter += Rotation2d(e.angle()) * Vector2d(cfg.center_jitter_rel * e.a() * rng.Normal(),
                                             cfg.center_jitter_rel * e.b() * rng.Normal());
  const double dtheta = cfg.angle_jitter_deg * kPi / 180.0 * rng.Normal();
  return Ellipse(e.center() + jitter, e.a() * sa, e.b() * sb, e.angle() + dtheta);
}

inline double SigmaFromDistortion(const SynthConfig& cfg, double distortion) {
  return 1.0 + cfg.sigma_kappa * distortion;
}

inline std::vector<FrameRecord> GenerateFrames(const SynthConfig& cfg, const SceneMap& map,
                                               std::uint64_t frame_seed) {
  const Matrix3d k = cfg.Intrinsics();
  Vector3d centroid = Vector3d::Zero();
  for (const MapObject& o : map.objects) centroid += o.ellipsoid.center();
  centroid /= static_cast<double>(map.objects.size());

  std::vector<DualQuadric> quadrics;
  for (const MapObject& o : map.objects) quadrics.push_back(DualQuadricFromEllipsoid(o.ellipsoid));

  std::vector<FrameRecord> frames(static_cast<size_t>(cfg.n_frames));
  for (int f = 0; f < cfg.n_frames; ++f) {
    Rng rng = Rng::Stream(frame_seed, static_cast<std::uint64_t>(f));
    const bool want_truncated = rng.Uniform() < cfg.partial_rate;
    bool done = false;
    for (int attempt = 0; attempt < 10000 && !done; ++attempt) {
      const double phi = rng.Uniform(0.0, 2.0 * kPi);
      const double radius = rng.Uniform(cfg.orbit_min_radius, cfg.orbit_max_radius);
      const Vector3d center =
          centroid + Vector3d(radius * std::cos(phi), radius * std::sin(phi),
                              rng.Uniform(cfg.orbit_min_height, cfg.orbit_max_height));
      const Vector3d target =
          centroid + cfg.look_at_jitter * Vector3d(rng.Uniform(-1, 1), rng.Uniform(-1, 1),
                                                   rng.Uniform(-1, 1));
      const double roll = cfg.roll_jitter_deg * kPi / 180.0 * rng.Uniform(-1.0, 1.0);
      const Matrix3d r = LookAtRotation(center, target, roll);
      const Camera cam(k, r, -r * center, cfg.image_size);

      // Split objects into fully visible ones and truncation candidates.
      std::vector<int> visible;
      std::vector<std::pair<int, BBox>> partial;
      std::vector<Ellipse> projections(map.objects.size());
      for (size_t o = 0; o < map.objects.size(); ++o) {
        // Keep objects well in front of the camera.
        if (cam.depth(map.objects[o].ellipsoid.center()) <
            map.objects[o].ellipsoid.semi_axes().maxCoeff() + 0.2) {
          continue;
        }
        try {
          projections[o] = ProjectEllipsoidToEllipse(cam, quadrics[o]);
        } catch (const Error&) {
          continue;
        }
        const Ellipse& e = projections[o];
        if (e.b() < cfg.min_axis_px) continue;
        const BBox box = EllipseBBox(e);
        if (detail::BoxInside(box, cfg.image_size)) {
          visible.push_back(static_cast<int>(o));
          continue;
        }
        if (cfg.truncation == TruncationModel::kImageBorder) {
          const BBox clipped{std::max(0.0, box.min_x), std::max(0.0, box.min_y),
                             std::min(cfg.image_size.width, box.max_x),
                             std::min(cfg.image_size.height, box.max_y)};
          const double frac = detail::BoxArea(clipped) / detail::BoxArea(box);
          if (clipped.width() > 0 && clipped.height() > 0 && frac >= cfg.min_visible_fraction &&
              frac <= cfg.max_visible_fraction) {
            partial.emplace_back(static_cast<int>(o), clipped);
          }
        }
      }
      if (static_cast<int>(visible.size()) < cfg.min_detections) continue;

      int truncated_object = -1;
      BBox truncated_box;
      if (want_truncated) {
        if (cfg.truncation == TruncationModel::kImageBorder) {
          if (partial.empty()) continue;
          const auto& pick = partial[rng.Index(partial.size())];
          truncated_object = pick.first;
          truncated_box = pick.second;
        } else {
          const size_t slot = rng.Index(visible.size());
          truncated_object = visible[slot];
          visible.erase(visible.begin() + static_cast<std::ptrdiff_t>(slot));
          const double frac =
              rng.Uniform(1.0 - cfg.max_visible_fraction, 1.0 - cfg.min_visible_fraction);
          truncated_box = CutBox(EllipseBBox(projections[truncated_object]),
                                 static_cast<int>(rng.Index(4)), frac);
        }
        truncated_box = detail::ShrinkBox(truncated_box, cfg.truncation_shrink);
      }

      FrameRecord rec;
      char id[32];
      std::snprintf(id, sizeof(id), "frame%05d", f);
      rec.id = id;
      rec.intrinsics = k;
      rec.image_size = cfg.image_size;
      rec.gt_camera = cam;
      std::vector<int> order = visible;
      if (truncated_object >= 0) order.push_back(truncated_object);
      std::sort(order.begin(), order.end());
      for (int o : order) {
        const Ellipse& clean = projections[o];
        Ellipse e = clean;
        DetectionTruth truth{map.objects[o].id, o == truncated_object, 0.0};
        if (truth.truncated) e = InscribedEllipse(truncated_box);
        if (cfg.noise_enabled) e = NoisyEllipse(e, cfg, rng);
        // Distortion is how far the detection ended up from the clean
        // projection, in IoU terms.
        if (truth.truncated || cfg.noise_enabled) truth.distortion = IoUDistance(clean, e);
        Detection det;
        det.label = map.objects[o].label;
        det.ellipse = e;
        if (cfg.emit_sigma) det.sigma = SigmaFromDistortion(cfg, truth.distortion);
        rec.detections.push_back(det);
        rec.truth.push_back(truth);
      }
      frames[static_cast<size_t>(f)] = std::move(rec);
      done = true;
    }
    if (!done) {
      throw Error(ErrorCode::kPlacementFailure,
                  "no camera placement satisfies frame " + std::to_string(f));
    }
  }
  return frames;
}

struct SyntheticScene {
  SceneMap map;
  std::vector<FrameRecord> frames;
};

inline SyntheticScene SynthGenerate(const SynthConfig& cfg) {
  cfg.Validate();
  Rng map_rng = Rng::Stream(*cfg.seed, 0xA11CE);
  SyntheticScene scene;
  scene.map = GenerateMap(cfg, map_rng);
  scene.frames = GenerateFrames(cfg, scene.map, SplitMix64(*cfg.seed ^ 0xF4A3E5ULL));
  return scene;
}

// Replaces one detection by the inscribed ellipse of its box with half of the
// box removed on a random side, and raises its sigma accordingly. Returns the
// index of the corrupted detection.
inline int CorruptDetection(FrameRecord& frame, const SynthConfig& cfg, Rng& rng,
                            double cut_fraction = 0.5) {
  if (frame.detections.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "frame has no detection to corrupt");
  }
  const int idx = static_cast<int>(rng.Index(frame.detections.size()));
  Detection& det = frame.detections[static_cast<size_t>(idx)];
  const Ellipse before = det.ellipse;
  det.ellipse =
      InscribedEllipse(CutBox(EllipseBBox(before), static_cast<int>(rng.Index(4)), cut_fraction));
  double distortion = IoUDistance(before, det.ellipse);
  if (!frame.truth.empty()) {
    DetectionTruth& truth = frame.truth[static_cast<size_t>(idx)];
    truth.truncated = true;
    truth.distortion += distortion;
    distortion = truth.distortion;
  }
  det.sigma = SigmaFromDistortion(cfg, distortion);
  return idx;
}

}  // namespace ellipose
