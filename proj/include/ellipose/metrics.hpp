#pragma once

// Ellipse-ellipse distances. Every metric takes the detection first; only
// the level-set distance is asymmetric and uses it as the sampling anchor.

#include <Eigen/Cholesky>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ellipose/geometry.hpp"
#include "ellipose/polygon.hpp"

namespace ellipose {

enum class MetricKind {
  kIoU,
  kGIoU,
  kBbox,
  kQBbox,
  kAlgebraicVec,
  kAlgebraicFro,
  kWasserstein,
  kBhattacharyya,
  kLevelSet,
};

inline constexpr std::array<MetricKind, 9> kAllMetrics = {
    MetricKind::kIoU,          MetricKind::kGIoU,
    MetricKind::kBbox,         MetricKind::kQBbox,
    MetricKind::kAlgebraicVec, MetricKind::kAlgebraicFro,
    MetricKind::kWasserstein,  MetricKind::kBhattacharyya,
    MetricKind::kLevelSet};

inline std::string_view MetricName(MetricKind kind) {
  switch (kind) {
    case MetricKind::kIoU: return "iou";
    case MetricKind::kGIoU: return "giou";
    case MetricKind::kBbox: return "bbox";
    case MetricKind::kQBbox: return "qbbox";
    case MetricKind::kAlgebraicVec: return "algebraic-vec";
    case MetricKind::kAlgebraicFro: return "algebraic-fro";
    case MetricKind::kWasserstein: return "wasserstein";
    case MetricKind::kBhattacharyya: return "bhattacharyya";
    case MetricKind::kLevelSet: return "levelset";
  }
  return "unknown";
}

inline std::optional<MetricKind> ParseMetric(std::string_view name) {
  for (MetricKind kind : kAllMetrics) {
    if (MetricName(kind) == name) return kind;
  }
  return std::nullopt;
}

inline std::string MetricNameList() {
  std::string out;
  for (MetricKind kind : kAllMetrics) {
    if (!out.empty()) out += ", ";
    out += MetricName(kind);
  }
  return out;
}

struct MetricContext {
  std::optional<ImageSize> image_size;
  int polygon_resolution = 256;
  LevelSetConfig level_set;

  void Validate() const {
    if (polygon_resolution < 16) {
      throw Error(ErrorCode::kInvalidArgument, "polygon_resolution must be >= 16");
    }
  }
};

struct AreaTerms {
  double intersection = 0.0;
  double union_area = 0.0;
  double hull = 0.0;
};

inline AreaTerms PolygonAreaTerms(const Ellipse& e1, const Ellipse& e2,
                                  int resolution, bool with_hull) {
  const Polygon p1 = EllipsePolygon(e1, resolution);
  const Polygon p2 = EllipsePolygon(e2, resolution);
  AreaTerms terms;
  const double a1 = PolygonArea(p1);
  const double a2 = PolygonArea(p2);
  terms.intersection = ConvexIntersectionArea(p1, p2);
  terms.union_area = a1 + a2 - terms.intersection;
  if (with_hull) {
    Polygon all = p1;
    all.insert(all.end(), p2.begin(), p2.end());
    terms.hull = PolygonArea(ConvexHull(std::move(all)));
  }
  return terms;
}

inline double IoUDistance(const Ellipse& e1, const Ellipse& e2,
                          const MetricContext& ctx = {}) {
  const AreaTerms t = PolygonAreaTerms(e1, e2, ctx.polygon_resolution, false);
  return std::clamp(1.0 - t.intersection / t.union_area, 0.0, 1.0);
}

inline double GIoUDistance(const Ellipse& e1, const Ellipse& e2,
                           const MetricContext& ctx = {}) {
  const AreaTerms t = PolygonAreaTerms(e1, e2, ctx.polygon_resolution, true);
  const double iou = t.intersection / t.union_area;
  const double hull = std::max(t.hull, t.union_area);
  return std::clamp(1.0 - (iou - (hull - t.union_area) / hull), 0.0, 2.0);
}

inline double BoxDistance(const BBox& b1, const BBox& b2) {
  return (b1.as_vector() - b2.as_vector()).squaredNorm();
}

inline double BboxDistance(const Ellipse& e1, const Ellipse& e2) {
  return BoxDistance(EllipseBBox(e1), EllipseBBox(e2));
}

// Both boxes are clipped to the image before comparison.
inline double QBboxDistance(const Ellipse& detection, const Ellipse& projection,
                            const MetricContext& ctx) {
  if (!ctx.image_size) {
    throw Error(ErrorCode::kInvalidArgument, "qbbox needs an image size");
  }
  return BoxDistance(ClipEllipseToImage(detection, *ctx.image_size),
                     ClipEllipseToImage(projection, *ctx.image_size));
}

enum class AlgebraicKind { kVec, kFro };

inline double AlgebraicDistance(const Ellipse& e1, const Ellipse& e2,
                                AlgebraicKind kind) {
  const Matrix3d diff = DualConicFromEllipse(e1).matrix() -
                        DualConicFromEllipse(e2).matrix();
  if (kind == AlgebraicKind::kVec) {
    // Five upper elements; m33 is pinned to -1 on both sides.
    const double d[5] = {diff(0, 0), diff(0, 1), diff(0, 2), diff(1, 1),
                         diff(1, 2)};
    double sum = 0.0;
    for (double v : d) sum += v * v;
    return sum;
  }
  return std::sqrt((diff * diff.transpose()).trace());
}

// Closed-form square root of a 2x2 symmetric positive semi-definite matrix.
inline Matrix2d SqrtSpd2(const Matrix2d& m) {
  const double s = std::sqrt(std::max(m.determinant(), 0.0));
  const double t = std::sqrt(std::max(m.trace() + 2.0 * s, 0.0));
  if (t == 0.0) return Matrix2d::Zero();
  return (m + s * Matrix2d::Identity()) / t;
}

inline double WassersteinDistance(const Ellipse& e1, const Ellipse& e2) {
  const GaussianEllipse g1 = GaussianFromEllipse(e1);
  const GaussianEllipse g2 = GaussianFromEllipse(e2);
  const Matrix2d s1h = SqrtSpd2(g1.covariance);
  Matrix2d cross = s1h * g2.covariance * s1h;
  cross = 0.5 * (cross + cross.transpose());
  const double shape =
      (g1.covariance + g2.covariance - 2.0 * SqrtSpd2(cross)).trace();
  return (g1.mean - g2.mean).squaredNorm() + std::max(shape, 0.0);
}

inline double BhattacharyyaDistance(const Ellipse& e1, const Ellipse& e2) {
  const GaussianEllipse g1 = GaussianFromEllipse(e1);
  const GaussianEllipse g2 = GaussianFromEllipse(e2);
  Matrix2d sigma = 0.5 * (g1.covariance + g2.covariance);
  Eigen::LLT<Matrix2d> llt(sigma);
  if (llt.info() != Eigen::Success) {
    sigma += 1e-12 * Matrix2d::Identity();
    llt.compute(sigma);
  }
  const Vector2d dmu = g1.mean - g2.mean;
  const double maha = dmu.dot(llt.solve(dmu));
  const double det = sigma.determinant();
  const double det12 = g1.covariance.determinant() * g2.covariance.determinant();
  return std::max(maha / 8.0 + 0.5 * std::log(det / std::sqrt(det12)), 0.0);
}

// Sum of squared embedding differences over samples taken on the level
// curves of the detection.
inline double LevelSetDistance(const Ellipse& detection, const Ellipse& other,
                               const LevelSetConfig& cfg = {}) {
  double sum = 0.0;
  for (const Vector2d& x : LevelSetSamples(detection, cfg)) {
    const double d = EmbeddingValue(detection, x) - EmbeddingValue(other, x);
    sum += d * d;
  }
  return sum;
}

inline double Distance(MetricKind kind, const Ellipse& detection,
                       const Ellipse& other, const MetricContext& ctx = {}) {
  switch (kind) {
    case MetricKind::kIoU: return IoUDistance(detection, other, ctx);
    case MetricKind::kGIoU: return GIoUDistance(detection, other, ctx);
    case MetricKind::kBbox: return BboxDistance(detection, other);
    case MetricKind::kQBbox: return QBboxDistance(detection, other, ctx);
    case MetricKind::kAlgebraicVec:
      return AlgebraicDistance(detection, other, AlgebraicKind::kVec);
    case MetricKind::kAlgebraicFro:
      return AlgebraicDistance(detection, other, AlgebraicKind::kFro);
    case MetricKind::kWasserstein: return WassersteinDistance(detection, other);
    case MetricKind::kBhattacharyya: return BhattacharyyaDistance(detection, other);
    case MetricKind::kLevelSet: return LevelSetDistance(detection, other, ctx.level_set);
  }
  return 0.0;
}

}  // namespace ellipose
