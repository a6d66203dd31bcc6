#pragma once

// Convex polygon helpers backing the area-based ellipse metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ellipose/geometry.hpp"

namespace ellipose {

using Polygon = std::vector<Vector2d>;

// Counter-clockwise regular n-gon inscribed in the ellipse.
inline Polygon EllipsePolygon(const Ellipse& e, int n) {
  Polygon poly;
  poly.reserve(static_cast<size_t>(n));
  const Matrix2d r = Rotation2d(e.angle());
  for (int k = 0; k < n; ++k) {
    const double phi = 2.0 * kPi * k / n;
    poly.push_back(e.center() +
                   r * Vector2d(e.a() * std::cos(phi), e.b() * std::sin(phi)));
  }
  return poly;
}

inline double PolygonArea(const Polygon& poly) {
  const size_t n = poly.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Vector2d& p = poly[i];
    const Vector2d& q = poly[(i + 1) % n];
    twice += p.x() * q.y() - p.y() * q.x();
  }
  return 0.5 * std::abs(twice);
}

inline BBox PolygonBounds(const Polygon& poly) {
  BBox box{poly[0].x(), poly[0].y(), poly[0].x(), poly[0].y()};
  for (const Vector2d& p : poly) {
    box.min_x = std::min(box.min_x, p.x());
    box.min_y = std::min(box.min_y, p.y());
    box.max_x = std::max(box.max_x, p.x());
    box.max_y = std::max(box.max_y, p.y());
  }
  return box;
}

namespace detail {

inline double Cross(const Vector2d& o, const Vector2d& a, const Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

}  // namespace detail

// Sutherland-Hodgman clipping of `subject` by the convex CCW polygon `clip`.
// Clip edges whose inner half-plane holds the whole subject bounding box are
// skipped; they cannot remove anything.
inline Polygon ConvexIntersection(const Polygon& subject, const Polygon& clip) {
  if (subject.size() < 3 || clip.size() < 3) return {};
  const BBox sb = PolygonBounds(subject);
  const BBox cb = PolygonBounds(clip);
  if (sb.max_x < cb.min_x || cb.max_x < sb.min_x || sb.max_y < cb.min_y ||
      cb.max_y < sb.min_y) {
    return {};
  }
  const std::array<Vector2d, 4> corners = {
      Vector2d(sb.min_x, sb.min_y), Vector2d(sb.max_x, sb.min_y),
      Vector2d(sb.max_x, sb.max_y), Vector2d(sb.min_x, sb.max_y)};

  Polygon out = subject;
  Polygon next;
  next.reserve(subject.size() + clip.size());
  const size_t m = clip.size();
  for (size_t i = 0; i < m && !out.empty(); ++i) {
    const Vector2d& a = clip[i];
    const Vector2d& b = clip[(i + 1) % m];
    bool all_inside = true;
    for (const Vector2d& c : corners) {
      if (detail::Cross(a, b, c) < 0.0) {
        all_inside = false;
        break;
      }
    }
    if (all_inside) continue;

    next.clear();
    const size_t n = out.size();
    for (size_t j = 0; j < n; ++j) {
      const Vector2d& p = out[j];
      const Vector2d& q = out[(j + 1) % n];
      const double dp = detail::Cross(a, b, p);
      const double dq = detail::Cross(a, b, q);
      if (dp >= 0.0) next.push_back(p);
      if ((dp >= 0.0) != (dq >= 0.0)) {
        const double t = dp / (dp - dq);
        next.push_back(p + t * (q - p));
      }
    }
    out.swap(next);
  }
  return out;
}

namespace detail {

// Monotone in the polar angle of d, range [0, 4).
inline double PseudoAngle(const Vector2d& d) {
  const double s = std::abs(d.x()) + std::abs(d.y());
  if (s == 0.0) return 0.0;
  const double p = d.y() / s;
  if (d.x() >= 0.0) return p >= 0.0 ? p : 4.0 + p;
  return 2.0 - p;
}

// Fan of a convex CCW polygon around its vertex mean. Wedge k lies between
// the rays through vertex k and vertex k + 1.
class Fan {
 public:
  explicit Fan(const Polygon& poly) : n_(poly.size()), sorted_(poly.size()) {
    for (const Vector2d& v : poly) center_ += v;
    center_ /= static_cast<double>(n_);
    size_t first = 0;
    for (size_t k = 0; k < n_; ++k) {
      sorted_[k] = PseudoAngle(poly[k] - center_);
      if (sorted_[k] < sorted_[first]) first = k;
    }
    std::rotate(sorted_.begin(), sorted_.begin() + static_cast<std::ptrdiff_t>(first),
                sorted_.end());
    first_ = first;
  }

  const Vector2d& center() const { return center_; }

  size_t Wedge(const Vector2d& p) const {
    const double a = PseudoAngle(p - center_);
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), a);
    // Before the first ray means the wedge that wraps around.
    const size_t r = it == sorted_.begin() ? n_ - 1
                                           : static_cast<size_t>(it - sorted_.begin()) - 1;
    const size_t k = r + first_;
    return k >= n_ ? k - n_ : k;
  }

 private:
  size_t n_;
  std::vector<double> sorted_;
  Vector2d center_ = Vector2d::Zero();
  size_t first_ = 0;
};

// Twice the signed area swept by the part of segment p -> q inside the convex
// polygon behind `fan`, measured from `origin`. Only the polygon edges facing
// the wedges the segment crosses can bound it. `inclusive` decides whether a
// segment lying on a same-direction polygon edge counts as inside.
inline double InsideSegmentCross(const Vector2d& p, const Vector2d& q, size_t wp, size_t wq,
                                 const Polygon& poly, const Fan& fan, bool inclusive,
                                 const Vector2d& origin) {
  const size_t n = poly.size();
  const Vector2d d = q - p;
  const double sweep = Cross(fan.center(), p, q);
  size_t start = 0;
  size_t count = n;
  if (std::abs(sweep) > 1e-12 * (p - fan.center()).norm() * d.norm()) {
    const size_t from = sweep > 0.0 ? wp : wq;
    const size_t to = sweep > 0.0 ? wq : wp;
    // One extra wedge on each side absorbs points sitting on a ray.
    count = std::min(n, (to + n - from) % n + 3);
    start = (from + n - 1) % n;
  }
  double t0 = 0.0;
  double t1 = 1.0;
  size_t k = start;
  for (size_t i = 0; i < count; ++i, k = k + 1 == n ? 0 : k + 1) {
    const Vector2d& a = poly[k];
    const Vector2d e = poly[k + 1 == n ? 0 : k + 1] - a;
    const double f0 = e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x());
    const double f1 = e.x() * d.y() - e.y() * d.x();
    if (f1 == 0.0) {
      if (f0 < 0.0) return 0.0;
      if (f0 == 0.0 && !(inclusive && e.dot(d) > 0.0)) return 0.0;
      continue;
    }
    const double t = -f0 / f1;
    if (f1 > 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 >= t1) return 0.0;
  }
  const Vector2d u = p + t0 * d - origin;
  const Vector2d v = p + t1 * d - origin;
  return u.x() * v.y() - u.y() * v.x();
}

inline double BoundaryInsideCross(const Polygon& poly, const Polygon& other, const Fan& fan,
                                  bool inclusive, const Vector2d& origin) {
  const size_t n = poly.size();
  const size_t w0 = fan.Wedge(poly[0]);
  size_t wp = w0;
  double twice = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const size_t j = i + 1 == n ? 0 : i + 1;
    const size_t wq = j == 0 ? w0 : fan.Wedge(poly[j]);
    twice += InsideSegmentCross(poly[i], poly[j], wp, wq, other, fan, inclusive, origin);
    wp = wq;
  }
  return twice;
}

}  // namespace detail

// Area of the intersection of two convex CCW polygons. The boundary of the
// intersection is made of the pieces of each boundary lying inside the other
// polygon; summing their cross products gives the area directly.
inline double ConvexIntersectionArea(const Polygon& p1, const Polygon& p2) {
  if (p1.size() < 3 || p2.size() < 3) return 0.0;
  const BBox b1 = PolygonBounds(p1);
  const BBox b2 = PolygonBounds(p2);
  if (b1.max_x <= b2.min_x || b2.max_x <= b1.min_x || b1.max_y <= b2.min_y ||
      b2.max_y <= b1.min_y) {
    return 0.0;
  }
  const detail::Fan fan1(p1);
  const detail::Fan fan2(p2);
  const Vector2d origin = 0.5 * (fan1.center() + fan2.center());
  const double twice = detail::BoundaryInsideCross(p1, p2, fan2, true, origin) +
                       detail::BoundaryInsideCross(p2, p1, fan1, false, origin);
  return std::max(0.0, 0.5 * twice);
}

// Andrew's monotone chain; returns the hull counter-clockwise.
inline Polygon ConvexHull(Polygon pts) {
  std::sort(pts.begin(), pts.end(), [](const Vector2d& l, const Vector2d& r) {
    return l.x() < r.x() || (l.x() == r.x() && l.y() < r.y());
  });
  if (pts.size() < 3) return pts;
  Polygon hull(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && detail::Cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, lower = k + 1; i > 0; --i) {
    while (k >= lower && detail::Cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0.0)
      --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace ellipose
