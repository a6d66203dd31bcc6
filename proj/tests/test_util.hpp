#pragma once

// Test-only helpers: random instance generators and sampling oracles that
// share no code path with the library's polygon machinery.

#include <cmath>
#include <cstdint>
#include <random>

#include "ellipose/geometry.hpp"

namespace ellipose::testing {

inline Ellipse RandomEllipse(std::mt19937_64& rng, double pos_range = 300.0,
                             double min_axis = 5.0, double max_axis = 80.0) {
  std::uniform_real_distribution<double> pos(-pos_range, pos_range);
  std::uniform_real_distribution<double> axis(min_axis, max_axis);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  return Ellipse(pos(rng), pos(rng), axis(rng), axis(rng), ang(rng));
}

// A second ellipse near the first so that the pair usually overlaps.
inline Ellipse NearbyEllipse(std::mt19937_64& rng, const Ellipse& e) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  const Vector2d offset = e.a() * Vector2d(u(rng), u(rng));
  return Ellipse(e.center() + offset, e.a() * scale(rng), e.b() * scale(rng),
                 e.angle() + 1.5 * u(rng));
}

inline bool Inside(const Ellipse& e, const Vector2d& x) {
  const Vector2d d = Rotation2d(-e.angle()) * (x - e.center());
  const double u = d.x() / e.a();
  const double v = d.y() / e.b();
  return u * u + v * v <= 1.0;
}

struct AreaEstimate {
  double intersection = 0.0;
  double union_area = 0.0;
  double iou() const { return intersection / union_area; }
};

// Stratified (jittered-grid) Monte-Carlo estimate over ~n_samples points of
// the joint bounding box.
inline AreaEstimate MonteCarloAreas(const Ellipse& e1, const Ellipse& e2,
                                    std::int64_t n_samples, std::uint64_t seed) {
  const double r1 = e1.a();
  const double r2 = e2.a();
  const double min_x = std::min(e1.center().x() - r1, e2.center().x() - r2);
  const double max_x = std::max(e1.center().x() + r1, e2.center().x() + r2);
  const double min_y = std::min(e1.center().y() - r1, e2.center().y() - r2);
  const double max_y = std::max(e1.center().y() + r1, e2.center().y() + r2);
  const double w = max_x - min_x;
  const double h = max_y - min_y;
  const auto nx = static_cast<std::int64_t>(
      std::ceil(std::sqrt(static_cast<double>(n_samples) * w / h)));
  const auto ny = std::max<std::int64_t>(1, n_samples / std::max<std::int64_t>(1, nx));
  const double dx = w / static_cast<double>(nx);
  const double dy = h / static_cast<double>(ny);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::int64_t both = 0;
  std::int64_t either = 0;
  for (std::int64_t i = 0; i < nx; ++i) {
    for (std::int64_t j = 0; j < ny; ++j) {
      const Vector2d x(min_x + (static_cast<double>(i) + jitter(rng)) * dx,
                       min_y + (static_cast<double>(j) + jitter(rng)) * dy);
      const bool in1 = Inside(e1, x);
      const bool in2 = Inside(e2, x);
      both += (in1 && in2);
      either += (in1 || in2);
    }
  }
  const double cell = dx * dy;
  return {static_cast<double>(both) * cell, static_cast<double>(either) * cell};
}

}  // namespace ellipose::testing
