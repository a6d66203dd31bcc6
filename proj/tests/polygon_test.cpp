#include <gtest/gtest.h>

#include "ellipose/polygon.hpp"
#include "ellipose/random.hpp"

namespace ellipose {
namespace {

Polygon Square(double x0, double y0, double side) {
  return {Vector2d(x0, y0), Vector2d(x0 + side, y0), Vector2d(x0 + side, y0 + side),
          Vector2d(x0, y0 + side)};
}

TEST(ConvexIntersectionArea, Squares) {
  EXPECT_NEAR(ConvexIntersectionArea(Square(0, 0, 2), Square(1, 1, 2)), 1.0, 1e-12);
  EXPECT_NEAR(ConvexIntersectionArea(Square(0, 0, 4), Square(1, 1, 1)), 1.0, 1e-12);
  EXPECT_NEAR(ConvexIntersectionArea(Square(0, 0, 2), Square(0, 0, 2)), 4.0, 1e-12);
  EXPECT_EQ(ConvexIntersectionArea(Square(0, 0, 1), Square(3, 0, 1)), 0.0);
  // Touching along an edge has no area.
  EXPECT_NEAR(ConvexIntersectionArea(Square(0, 0, 1), Square(1, 0, 1)), 0.0, 1e-12);
  // Shared edge, overlapping interiors.
  EXPECT_NEAR(ConvexIntersectionArea(Square(0, 0, 2), Square(0, 0, 1)), 1.0, 1e-12);
}

TEST(ConvexIntersectionArea, IdenticalEllipsePolygons) {
  const Polygon p = EllipsePolygon(Ellipse(3, -2, 40, 11, 0.7), 256);
  EXPECT_NEAR(ConvexIntersectionArea(p, p), PolygonArea(p), 1e-9 * PolygonArea(p));
}

TEST(ConvexIntersectionArea, MatchesClipping) {
  Rng rng(31);
  for (int i = 0; i < 20000; ++i) {
    const double thin = rng.Uniform(0.0, 1.0) < 0.2 ? 0.02 : 1.0;
    const Ellipse e1(rng.Uniform(-50, 50), rng.Uniform(-50, 50), rng.Uniform(5, 80),
                     rng.Uniform(1, 40) * thin + 0.5, rng.Uniform(0, kPi));
    const Ellipse e2(rng.Uniform(-50, 50), rng.Uniform(-50, 50), rng.Uniform(5, 80),
                     rng.Uniform(1, 40), rng.Uniform(0, kPi));
    const Polygon p1 = EllipsePolygon(e1, static_cast<int>(rng.Uniform(3, 300)));
    const Polygon p2 = EllipsePolygon(e2, static_cast<int>(rng.Uniform(3, 300)));
    const double clipped = PolygonArea(ConvexIntersection(p1, p2));
    const double scale = std::min(PolygonArea(p1), PolygonArea(p2));
    ASSERT_NEAR(ConvexIntersectionArea(p1, p2), clipped, 1e-9 * scale) << "case " << i;
    ASSERT_NEAR(ConvexIntersectionArea(p2, p1), clipped, 1e-9 * scale) << "case " << i;
  }
}

}  // namespace
}  // namespace ellipose
