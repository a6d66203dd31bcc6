#pragma once

// Camera pose from ellipse detections and a map of ellipsoids: P3P-in-RANSAC
// on the centers, then refinement of the ellipse alignment cost.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "ellipose/metrics.hpp"
#include "ellipose/optim.hpp"
#include "ellipose/p3p.hpp"
#include "ellipose/parallel.hpp"
#include "ellipose/random.hpp"

namespace ellipose {

struct Detection {
  std::string label;
  Ellipse ellipse;
  std::optional<double> sigma;
  std::optional<double> score;

  void Validate() const {
    if (sigma && !(*sigma > 0.0 && std::isfinite(*sigma))) {
      throw Error(ErrorCode::kInvalidArgument, "detection sigma must be positive");
    }
    if (score && !(*score >= 0.0 && *score <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "detection score must lie in [0, 1]");
    }
  }
};

struct MapObject {
  std::string id;
  std::string label;
  Ellipsoid ellipsoid;
};

struct SceneMap {
  std::vector<MapObject> objects;

  void Validate() const {
    std::unordered_set<std::string> seen;
    for (const MapObject& o : objects) {
      if (!seen.insert(o.id).second) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate map object id '" + o.id + "'");
      }
    }
  }

  int IndexOf(const std::string& id) const {
    for (size_t i = 0; i < objects.size(); ++i) {
      if (objects[i].id == id) return static_cast<int>(i);
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown map object id '" + id + "'");
  }
};

struct AssociationPair {
  int detection = 0;
  std::string object_id;
};
using Association = std::vector<AssociationPair>;

struct PoseEstimate {
  Camera camera;
  Association inliers;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> per_object_residuals;  // one per inlier
  double mean_overlap = 0.0;                 // RANSAC score
  bool refined = false;
  // Set when refinement ran on only two objects.
  bool underconstrained = false;
};

// IoU between a detection and the projection of an ellipsoid; 0 when the
// projection is not an ellipse in front of the camera.
inline double ReprojectionOverlap(const Ellipse& detection, const Camera& cam,
                                  const DualQuadric& q, const MetricContext& ctx = {}) {
  Ellipse projected;
  try {
    projected = ProjectEllipsoidToEllipse(cam, q);
  } catch (const Error&) {
    return 0.0;
  }
  return 1.0 - IoUDistance(detection, projected, ctx);
}

struct RansacOptions {
  int max_triples = 10000;
  double inlier_overlap = 0.2;
  std::uint64_t seed = 0;
  MetricContext ctx;
};

namespace detail {

struct ScoredMatch {
  int detection;
  int object;
  double overlap;
};

// Greedy one-to-one label-consistent matching by decreasing overlap.
inline std::vector<ScoredMatch> MatchByOverlap(const std::vector<Detection>& detections,
                                               const std::vector<DualQuadric>& quadrics,
                                               const SceneMap& map, const Camera& cam,
                                               const MetricContext& ctx) {
  std::vector<ScoredMatch> candidates;
  for (size_t d = 0; d < detections.size(); ++d) {
    for (size_t o = 0; o < map.objects.size(); ++o) {
      if (map.objects[o].label != detections[d].label) continue;
      const double iou = ReprojectionOverlap(detections[d].ellipse, cam, quadrics[o], ctx);
      if (iou > 0.0) candidates.push_back({static_cast<int>(d), static_cast<int>(o), iou});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const ScoredMatch& a, const ScoredMatch& b) { return a.overlap > b.overlap; });
  std::vector<bool> det_used(detections.size(), false);
  std::vector<bool> obj_used(map.objects.size(), false);
  std::vector<ScoredMatch> matches;
  for (const ScoredMatch& c : candidates) {
    if (det_used[c.detection] || obj_used[c.object]) continue;
    det_used[c.detection] = obj_used[c.object] = true;
    matches.push_back(c);
  }
  std::sort(matches.begin(), matches.end(),
            [](const ScoredMatch& a, const ScoredMatch& b) { return a.detection < b.detection; });
  return matches;
}

using Triple = std::array<std::pair<int, int>, 3>;  // (detection, object)

inline bool Compatible(const std::pair<int, int>& a, const std::pair<int, int>& b) {
  return a.first != b.first && a.second != b.second;
}

}  // namespace detail

inline Vector3d BearingFromPixel(const Matrix3d& k, const Vector2d& px) {
  return k.triangularView<Eigen::Upper>().solve(Vector3d(px.x(), px.y(), 1.0)).normalized();
}

// Label-consistent triples; all of them when there are at most `cap`,
// otherwise `cap` uniform draws.
inline std::vector<detail::Triple> CandidateTriples(const std::vector<Detection>& detections,
                                                    const SceneMap& map, int cap, Rng& rng) {
  std::vector<std::pair<int, int>> pairs;
  for (size_t d = 0; d < detections.size(); ++d) {
    for (size_t o = 0; o < map.objects.size(); ++o) {
      if (map.objects[o].label == detections[d].label) {
        pairs.emplace_back(static_cast<int>(d), static_cast<int>(o));
      }
    }
  }
  std::vector<detail::Triple> triples;
  bool over_cap = false;
  for (size_t i = 0; i < pairs.size() && !over_cap; ++i) {
    for (size_t j = i + 1; j < pairs.size() && !over_cap; ++j) {
      if (!detail::Compatible(pairs[i], pairs[j])) continue;
      for (size_t k = j + 1; k < pairs.size(); ++k) {
        if (!detail::Compatible(pairs[i], pairs[k]) || !detail::Compatible(pairs[j], pairs[k])) {
          continue;
        }
        if (static_cast<int>(triples.size()) == cap) {
          over_cap = true;
          break;
        }
        triples.push_back({pairs[i], pairs[j], pairs[k]});
      }
    }
  }
  if (!over_cap) return triples;

  triples.clear();
  const std::uint64_t n = pairs.size();
  std::int64_t attempts = 0;
  while (static_cast<int>(triples.size()) < cap && attempts < 1000LL * cap) {
    ++attempts;
    const std::uint64_t i = rng.Index(n);
    const std::uint64_t j = rng.Index(n);
    const std::uint64_t k = rng.Index(n);
    if (!(i < j && j < k)) continue;
    if (!detail::Compatible(pairs[i], pairs[j]) || !detail::Compatible(pairs[i], pairs[k]) ||
        !detail::Compatible(pairs[j], pairs[k])) {
      continue;
    }
    triples.push_back({pairs[i], pairs[j], pairs[k]});
  }
  return triples;
}

inline PoseEstimate RansacInit(const std::vector<Detection>& detections, const SceneMap& map,
                               const Matrix3d& k, ImageSize image_size,
                               const RansacOptions& opts = {}) {
  map.Validate();
  for (const Detection& d : detections) d.Validate();
  int usable = 0;
  for (const Detection& d : detections) {
    usable += std::any_of(map.objects.begin(), map.objects.end(),
                          [&](const MapObject& o) { return o.label == d.label; });
  }
  if (usable < 3) {
    throw Error(ErrorCode::kInsufficientObjects,
                "need three detections with a matching map label, got " + std::to_string(usable));
  }

  std::vector<DualQuadric> quadrics;
  quadrics.reserve(map.objects.size());
  for (const MapObject& o : map.objects) quadrics.push_back(DualQuadricFromEllipsoid(o.ellipsoid));

  Rng rng(opts.seed);
  const std::vector<detail::Triple> triples = CandidateTriples(detections, map, opts.max_triples, rng);
  if (triples.empty()) {
    throw Error(ErrorCode::kInsufficientObjects, "no label-consistent triple of pairs");
  }

  struct Hypothesis {
    bool valid = false;
    Camera camera;
    double score = -1.0;
  };
  std::vector<Hypothesis> hyps(triples.size());
  ParallelFor(triples.size(), [&](size_t t) {
    const detail::Triple& tri = triples[t];
    std::array<Vector3d, 3> points;
    std::array<Vector3d, 3> bearings;
    for (int i = 0; i < 3; ++i) {
      points[i] = map.objects[tri[i].second].ellipsoid.center();
      bearings[i] = BearingFromPixel(k, detections[tri[i].first].ellipse.center());
    }
    std::vector<RigidPose> poses;
    try {
      poses = SolveP3P(points, bearings);
    } catch (const Error&) {
      return;
    }
    // Best of the P3P solutions by overlap over the triple itself.
    double best_local = -1.0;
    Camera best_cam;
    for (const RigidPose& p : poses) {
      Camera cam;
      try {
        cam = Camera(k, Reorthonormalize(p.rotation), p.translation, image_size);
      } catch (const Error&) {
        continue;
      }
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        sum += ReprojectionOverlap(detections[tri[i].first].ellipse, cam, quadrics[tri[i].second],
                                   opts.ctx);
      }
      if (sum > best_local) {
        best_local = sum;
        best_cam = cam;
      }
    }
    if (best_local < 0.0) return;
    const std::vector<detail::ScoredMatch> matches =
        detail::MatchByOverlap(detections, quadrics, map, best_cam, opts.ctx);
    double total = 0.0;
    for (const auto& m : matches) total += m.overlap;
    hyps[t] = {true, best_cam, total / static_cast<double>(detections.size())};
  });

  // Highest score wins; ties go to the earliest triple.
  int best = -1;
  for (size_t t = 0; t < hyps.size(); ++t) {
    if (hyps[t].valid && (best < 0 || hyps[t].score > hyps[best].score)) best = static_cast<int>(t);
  }
  if (best < 0) throw Error(ErrorCode::kNoValidPose, "no triple produced a camera pose");

  PoseEstimate est;
  est.camera = hyps[best].camera;
  est.mean_overlap = hyps[best].score;
  for (const auto& m : detail::MatchByOverlap(detections, quadrics, map, est.camera, opts.ctx)) {
    if (m.overlap >= opts.inlier_overlap) {
      est.inliers.push_back({m.detection, map.objects[m.object].id});
      est.per_object_residuals.push_back(1.0 - m.overlap);
    }
  }
  if (est.inliers.size() < 3) {
    throw Error(ErrorCode::kNoValidPose, "best pose has fewer than three inliers");
  }
  return est;
}

struct RefineOptions {
  MetricKind metric = MetricKind::kLevelSet;
  MetricContext ctx;
  OptimOptions optim;
  // Weighted sum of sigma^-1 * distance instead of the sum of squared
  // distances.
  bool use_uncertainty = false;
  // Cost returned when a probe pose projects an ellipsoid degenerately.
  double degenerate_penalty = 1e9;
  int max_rounds = 5;
};

namespace detail {

struct RefineTerm {
  const Detection* detection;
  DualQuadric quadric;
  double weight;
};

inline std::vector<RefineTerm> RefineTerms(const Association& pairs,
                                           const std::vector<Detection>& detections,
                                           const SceneMap& map, bool use_uncertainty) {
  std::vector<RefineTerm> terms;
  for (const AssociationPair& p : pairs) {
    if (p.detection < 0 || p.detection >= static_cast<int>(detections.size())) {
      throw Error(ErrorCode::kInvalidArgument, "association refers to a missing detection");
    }
    const Detection& d = detections[p.detection];
    const MapObject& o = map.objects[map.IndexOf(p.object_id)];
    if (o.label != d.label) {
      throw Error(ErrorCode::kInvalidArgument, "association pairs differing labels");
    }
    double weight = 1.0;
    if (use_uncertainty) {
      if (!d.sigma) {
        throw Error(ErrorCode::kMissingSigma,
                    "detection " + std::to_string(p.detection) + " has no sigma");
      }
      weight = 1.0 / *d.sigma;
    }
    terms.push_back({&d, DualQuadricFromEllipsoid(o.ellipsoid), weight});
  }
  return terms;
}

// Per-term distances at a camera; nullopt when any projection degenerates or
// leaves the image entirely (QBbox).
inline std::optional<std::vector<double>> TermDistances(const std::vector<RefineTerm>& terms,
                                                        const Camera& cam,
                                                        const RefineOptions& opts) {
  std::vector<double> out;
  out.reserve(terms.size());
  for (const RefineTerm& t : terms) {
    try {
      const Ellipse projected = ProjectEllipsoidToEllipse(cam, t.quadric);
      out.push_back(Distance(opts.metric, t.detection->ellipse, projected, opts.ctx));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDegenerateProjection || e.code() == ErrorCode::kDegenerateConic ||
          e.code() == ErrorCode::kEmptyIntersection) {
        return std::nullopt;
      }
      throw;
    }
  }
  return out;
}

inline double CombineTerms(const std::vector<RefineTerm>& terms, const std::vector<double>& dist,
                           bool use_uncertainty) {
  double cost = 0.0;
  for (size_t i = 0; i < terms.size(); ++i) {
    cost += use_uncertainty ? terms[i].weight * dist[i] : dist[i] * dist[i];
  }
  return cost;
}

}  // namespace detail

// Cost minimized by Refine, evaluated at a given camera.
inline double AlignmentCost(const Camera& cam, const Association& pairs,
                            const std::vector<Detection>& detections, const SceneMap& map,
                            const RefineOptions& opts = {}) {
  const auto terms = detail::RefineTerms(pairs, detections, map, opts.use_uncertainty);
  const auto dist = detail::TermDistances(terms, cam, opts);
  if (!dist) return opts.degenerate_penalty;
  return detail::CombineTerms(terms, *dist, opts.use_uncertainty);
}

inline PoseEstimate Refine(const PoseEstimate& init, const std::vector<Detection>& detections,
                           const SceneMap& map, const RefineOptions& opts = {}) {
  opts.ctx.Validate();
  opts.optim.Validate();
  if (init.inliers.size() < 2) {
    throw Error(ErrorCode::kInsufficientObjects, "refinement needs at least two inliers");
  }
  const auto terms = detail::RefineTerms(init.inliers, detections, map, opts.use_uncertainty);

  auto cost_at = [&](const Camera& cam) {
    const auto dist = detail::TermDistances(terms, cam, opts);
    if (!dist) return opts.degenerate_penalty;
    return detail::CombineTerms(terms, *dist, opts.use_uncertainty);
  };

  PoseEstimate est = init;
  est.refined = true;
  est.underconstrained = init.inliers.size() < 3;
  est.initial_cost = cost_at(init.camera);

  Camera base = init.camera;
  double cost = est.initial_cost;
  for (int round = 0; round < opts.max_rounds; ++round) {
    const OptimResult r = Minimize(
        [&](const VectorXd& x) { return cost_at(ApplyPoseParams(PoseParams(x), base)); },
        VectorXd::Zero(6), opts.optim);
    if (r.cost < cost) {
      base = ApplyPoseParams(PoseParams(r.x), base);
      cost = r.cost;
    }
    // Another round only when the increment was cut short; re-centering
    // keeps the rotation increment small.
    if (r.termination != Termination::kMaxIterations) break;
  }
  est.camera = base;
  est.final_cost = cost;
  est.per_object_residuals.clear();
  if (const auto dist = detail::TermDistances(terms, base, opts)) est.per_object_residuals = *dist;
  return est;
}

}  // namespace ellipose
