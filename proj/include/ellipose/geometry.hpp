#pragma once

// Projective geometry of ellipses and ellipsoids: parametric <-> dual-form
// conversions, projection through a pinhole camera, Gaussian and level-set
// embeddings of an ellipse.

#include <Eigen/Core>
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "ellipose/error.hpp"

namespace ellipose {

using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::Vector4d;

inline constexpr double kPi = std::numbers::pi;

inline Matrix2d Rotation2d(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Matrix2d r;
  r << c, -s, s, c;
  return r;
}

// Wraps an ellipse orientation into (-pi/2, pi/2].
inline double WrapHalfTurn(double angle) {
  double a = std::remainder(angle, kPi);  // [-pi/2, pi/2]
  if (a <= -kPi / 2) a += kPi;
  return a;
}

// Parametric ellipse in pixels. Always stored canonically: a >= b > 0 and
// angle in (-pi/2, pi/2]; circles get angle 0.
class Ellipse {
 public:
  Ellipse() : Ellipse(Vector2d::Zero(), 1.0, 1.0, 0.0) {}

  Ellipse(const Vector2d& center, double a, double b, double angle)
      : center_(center) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b) ||
        !std::isfinite(angle) || !center.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ellipse needs finite center/angle and positive semi-axes");
    }
    if (b > a) {
      std::swap(a, b);
      angle += kPi / 2;
    }
    a_ = a;
    b_ = b;
    angle_ = (a - b <= kCircleTolerance * a) ? 0.0 : WrapHalfTurn(angle);
  }

  Ellipse(double cx, double cy, double a, double b, double angle)
      : Ellipse(Vector2d(cx, cy), a, b, angle) {}

  const Vector2d& center() const { return center_; }
  double a() const { return a_; }
  double b() const { return b_; }
  Vector2d semi_axes() const { return {a_, b_}; }
  double angle() const { return angle_; }
  double area() const { return kPi * a_ * b_; }

  // Shape matrix M with (x-c)^T M (x-c) = 1 on the contour.
  Matrix2d shape_matrix() const {
    const Matrix2d r = Rotation2d(angle_);
    return r * Vector2d(1.0 / (a_ * a_), 1.0 / (b_ * b_)).asDiagonal() *
           r.transpose();
  }

  // Inverse of shape_matrix(), i.e. R diag(a^2, b^2) R^T.
  Matrix2d covariance() const {
    const Matrix2d r = Rotation2d(angle_);
    return r * Vector2d(a_ * a_, b_ * b_).asDiagonal() * r.transpose();
  }

  Vector2d point_at(double phi) const {
    return center_ +
           Rotation2d(angle_) * Vector2d(a_ * std::cos(phi), b_ * std::sin(phi));
  }

  Ellipse translated(const Vector2d& t) const {
    return Ellipse(center_ + t, a_, b_, angle_);
  }

  // Rigid motion x -> R(theta) (x - pivot) + pivot.
  Ellipse rotated_about(const Vector2d& pivot, double theta) const {
    return Ellipse(Rotation2d(theta) * (center_ - pivot) + pivot, a_, b_,
                   angle_ + theta);
  }

  static constexpr double kCircleTolerance = 1e-12;

 private:
  Vector2d center_;
  double a_ = 1.0;
  double b_ = 1.0;
  double angle_ = 0.0;
};

struct ImageSize {
  double width = 0.0;
  double height = 0.0;
};

// Axis-aligned box (min_x, min_y, max_x, max_y).
struct BBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  Vector4d as_vector() const { return {min_x, min_y, max_x, max_y}; }
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  Vector2d center() const { return {(min_x + max_x) / 2, (min_y + max_y) / 2}; }
};

// Symmetric 3x3 dual conic, stored with m(2,2) = -1.
class DualConic {
 public:
  DualConic() : m_(Vector3d(1, 1, -1).asDiagonal()) {}

  // Accepts any scale; the stored matrix is symmetrized and rescaled so that
  // m(2,2) = -1. Throws DegenerateConic when m(2,2) vanishes.
  explicit DualConic(const Matrix3d& m) {
    Matrix3d sym = 0.5 * (m + m.transpose());
    const double scale = sym.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale) ||
        std::abs(sym(2, 2)) <= 1e-12 * scale) {
      throw Error(ErrorCode::kDegenerateConic,
                  "dual conic has no finite center (m33 ~ 0)");
    }
    m_ = sym / (-sym(2, 2));
    m_(2, 2) = -1.0;
  }

  const Matrix3d& matrix() const { return m_; }

 private:
  Matrix3d m_;
};

inline DualConic DualConicFromEllipse(const Ellipse& e) {
  Matrix3d h = Matrix3d::Identity();
  h.topLeftCorner<2, 2>() = Rotation2d(e.angle());
  h.topRightCorner<2, 1>() = e.center();
  const Matrix3d d = Vector3d(e.a() * e.a(), e.b() * e.b(), -1.0).asDiagonal();
  return DualConic(h * d * h.transpose());
}

// Closed-form recovery of a canonical ellipse from a dual conic.
inline Ellipse EllipseFromDualConic(const DualConic& conic) {
  const Matrix3d& m = conic.matrix();
  const Vector2d center = -m.topRightCorner<2, 1>();
  const Matrix2d cov = m.topLeftCorner<2, 2>() + center * center.transpose();

  const double p = cov(0, 0);
  const double q = 0.5 * (cov(0, 1) + cov(1, 0));
  const double r = cov(1, 1);
  const double mean = 0.5 * (p + r);
  const double radius = std::hypot(0.5 * (p - r), q);
  const double l_max = mean + radius;
  const double l_min = mean - radius;
  if (!(l_min > 0.0) || !std::isfinite(l_max) || !center.allFinite()) {
    throw Error(ErrorCode::kDegenerateConic,
                "dual conic does not represent a real ellipse");
  }
  double angle = 0.5 * std::atan2(2.0 * q, p - r);
  if (radius <= 1e-10 * mean) angle = 0.0;
  return Ellipse(center, std::sqrt(l_max), std::sqrt(l_min), angle);
}

inline Ellipse EllipseFromDualConic(const Matrix3d& m) {
  return EllipseFromDualConic(DualConic(m));
}

class Ellipsoid {
 public:
  Ellipsoid() : Ellipsoid(Vector3d::Zero(), Vector3d::Ones()) {}
  Ellipsoid(const Vector3d& center, const Vector3d& semi_axes,
            const Matrix3d& rotation = Matrix3d::Identity())
      : center_(center), semi_axes_(semi_axes), rotation_(rotation) {
    if (!(semi_axes.minCoeff() > 0.0) || !semi_axes.allFinite() ||
        !center.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ellipsoid semi-axes must be positive and finite");
    }
    const double ortho = (rotation * rotation.transpose() -
                          Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!(ortho <= 1e-9) || std::abs(rotation.determinant() - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument,
                  "ellipsoid rotation must be orthonormal with det +1");
    }
  }

  const Vector3d& center() const { return center_; }
  const Vector3d& semi_axes() const { return semi_axes_; }
  const Matrix3d& rotation() const { return rotation_; }

 private:
  Vector3d center_;
  Vector3d semi_axes_;
  Matrix3d rotation_;
};

class DualQuadric {
 public:
  explicit DualQuadric(const Matrix4d& m) : m_(0.5 * (m + m.transpose())) {}

  const Matrix4d& matrix() const { return m_; }

  Vector3d center() const { return m_.topRightCorner<3, 1>() / m_(3, 3); }

 private:
  Matrix4d m_;
};

inline DualQuadric DualQuadricFromEllipsoid(const Ellipsoid& e) {
  Matrix4d h = Matrix4d::Identity();
  h.topLeftCorner<3, 3>() = e.rotation();
  h.topRightCorner<3, 1>() = e.center();
  const Vector3d sq = e.semi_axes().cwiseProduct(e.semi_axes());
  const Matrix4d d = Vector4d(sq.x(), sq.y(), sq.z(), -1.0).asDiagonal();
  return DualQuadric(h * d * h.transpose());
}

// Pinhole camera, world-to-camera convention x_c = R X + t.
class Camera {
 public:
  Camera() = default;

  Camera(const Matrix3d& intrinsics, const Matrix3d& rotation,
         const Vector3d& translation, ImageSize image_size = {})
      : k_(intrinsics), r_(rotation), t_(translation), image_size_(image_size) {
    if (std::abs(k_(2, 2) - 1.0) > 1e-12 || !(k_(0, 0) > 0.0) ||
        !(k_(1, 1) > 0.0) || k_(1, 0) != 0.0 || k_(2, 0) != 0.0 ||
        k_(2, 1) != 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "intrinsics must be upper triangular with K33 = 1");
    }
    const double ortho =
        (r_ * r_.transpose() - Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!(ortho <= 1e-9) || std::abs(r_.determinant() - 1.0) > 1e-9 ||
        !t_.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "camera rotation must be orthonormal with det +1");
    }
  }

  const Matrix3d& intrinsics() const { return k_; }
  const Matrix3d& rotation() const { return r_; }
  const Vector3d& translation() const { return t_; }
  const ImageSize& image_size() const { return image_size_; }

  Vector3d center() const { return -r_.transpose() * t_; }

  Eigen::Matrix<double, 3, 4> projection_matrix() const {
    Eigen::Matrix<double, 3, 4> rt;
    rt.leftCols<3>() = r_;
    rt.col(3) = t_;
    return k_ * rt;
  }

  Vector2d project(const Vector3d& world) const {
    const Vector3d x = k_ * (r_ * world + t_);
    return x.head<2>() / x.z();
  }

  double depth(const Vector3d& world) const { return (r_ * world + t_).z(); }

 private:
  Matrix3d k_ = Matrix3d::Identity();
  Matrix3d r_ = Matrix3d::Identity();
  Vector3d t_ = Vector3d::Zero();
  ImageSize image_size_;
};

// C* = P Q* P^T. Rejects quadrics behind the camera, containing the camera
// center, or crossing the principal plane.
inline DualConic ProjectEllipsoid(const Camera& cam, const DualQuadric& q) {
  if (!(cam.depth(q.center()) > 0.0)) {
    throw Error(ErrorCode::kDegenerateProjection,
                "ellipsoid center is not in front of the camera");
  }
  const Eigen::Matrix<double, 3, 4> p = cam.projection_matrix();
  const Matrix3d c = p * q.matrix() * p.transpose();
  try {
    DualConic conic(c);
    EllipseFromDualConic(conic);
    return conic;
  } catch (const Error&) {
    throw Error(ErrorCode::kDegenerateProjection,
                "projection of the ellipsoid is not an ellipse");
  }
}

inline Ellipse ProjectEllipsoidToEllipse(const Camera& cam,
                                         const DualQuadric& q) {
  return EllipseFromDualConic(ProjectEllipsoid(cam, q));
}

struct GaussianEllipse {
  Vector2d mean;
  Matrix2d covariance;
};

inline GaussianEllipse GaussianFromEllipse(const Ellipse& e) {
  return {e.center(), e.covariance()};
}

// Phi(x) = (x-c)^T R diag(1/a^2, 1/b^2) R^T (x-c); 1 on the contour.
inline double EmbeddingValue(const Ellipse& e, const Vector2d& x) {
  const Vector2d local = Rotation2d(-e.angle()) * (x - e.center());
  const double u = local.x() / e.a();
  const double v = local.y() / e.b();
  return u * u + v * v;
}

// Sampling pattern for the level-set distance. Levels are values of Phi, so
// level s lies at radial factor sqrt(s) of the contour. level_scale widens or
// narrows the sampled area.
struct LevelSetConfig {
  int n_azimuths = 6;
  std::vector<double> levels = {0.25, 1.0, 2.25, 4.0};
  double level_scale = 1.0;
};

inline std::vector<Vector2d> LevelSetSamples(const Ellipse& e, int n_azimuths,
                                             const std::vector<double>& levels) {
  if (n_azimuths < 3) {
    throw Error(ErrorCode::kInvalidSampling, "need at least 3 azimuths");
  }
  for (double s : levels) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidSampling, "levels must be positive");
    }
  }
  const Matrix2d r = Rotation2d(e.angle());
  std::vector<Vector2d> out;
  out.reserve(levels.size() * static_cast<size_t>(n_azimuths));
  for (double s : levels) {
    const double radial = std::sqrt(s);
    for (int k = 0; k < n_azimuths; ++k) {
      const double phi = 2.0 * kPi * k / n_azimuths;
      out.push_back(e.center() + radial * (r * Vector2d(e.a() * std::cos(phi),
                                                        e.b() * std::sin(phi))));
    }
  }
  return out;
}

inline std::vector<Vector2d> LevelSetSamples(const Ellipse& e,
                                             const LevelSetConfig& cfg = {}) {
  std::vector<double> levels = cfg.levels;
  for (double& s : levels) s *= cfg.level_scale;
  return LevelSetSamples(e, cfg.n_azimuths, levels);
}

inline BBox EllipseBBox(const Ellipse& e) {
  const double c = std::cos(e.angle());
  const double s = std::sin(e.angle());
  const double a2 = e.a() * e.a();
  const double b2 = e.b() * e.b();
  const double hw = std::sqrt(a2 * c * c + b2 * s * s);
  const double hh = std::sqrt(a2 * s * s + b2 * c * c);
  return {e.center().x() - hw, e.center().y() - hh, e.center().x() + hw,
          e.center().y() + hh};
}

// Bounding box of (ellipse region) ∩ [0,w]x[0,h]. Candidate extreme points
// are the ellipse's own axis-extreme points, its crossings with the four
// image borders and the image corners it covers.
inline BBox ClipEllipseToImage(const Ellipse& e, ImageSize image) {
  const Matrix2d m = e.shape_matrix();
  const Matrix2d cov = e.covariance();
  const Vector2d c = e.center();
  const double w = image.width;
  const double h = image.height;
  constexpr double kSlack = 1e-9;

  auto inside_image = [&](const Vector2d& p) {
    return p.x() >= -kSlack && p.x() <= w + kSlack && p.y() >= -kSlack &&
           p.y() <= h + kSlack;
  };

  std::vector<Vector2d> pts;
  for (int axis = 0; axis < 2; ++axis) {
    const Vector2d dir = cov.col(axis) / std::sqrt(cov(axis, axis));
    for (double sgn : {-1.0, 1.0}) {
      const Vector2d p = c + sgn * dir;
      if (inside_image(p)) pts.push_back(p);
    }
  }
  // Crossings with x = const (axis 0) and y = const (axis 1) borders.
  for (int axis = 0; axis < 2; ++axis) {
    const int other = 1 - axis;
    const double span = axis == 0 ? h : w;
    for (double border : {0.0, axis == 0 ? w : h}) {
      const double d = border - c(axis);
      // m_oo u^2 + 2 m_ao d u + (m_aa d^2 - 1) = 0, u = offset along other.
      const double qa = m(other, other);
      const double qb = 2.0 * m(axis, other) * d;
      const double qc = m(axis, axis) * d * d - 1.0;
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc < 0.0) continue;
      const double sq = std::sqrt(disc);
      for (double u : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)}) {
        Vector2d p;
        p(axis) = border;
        p(other) = c(other) + u;
        if (p(other) >= -kSlack && p(other) <= span + kSlack) pts.push_back(p);
      }
    }
  }
  for (const Vector2d corner :
       {Vector2d(0, 0), Vector2d(w, 0), Vector2d(0, h), Vector2d(w, h)}) {
    if ((corner - c).dot(m * (corner - c)) <= 1.0) pts.push_back(corner);
  }
  if (pts.empty()) {
    throw Error(ErrorCode::kEmptyIntersection,
                "ellipse lies entirely outside the image");
  }
  BBox box{pts[0].x(), pts[0].y(), pts[0].x(), pts[0].y()};
  for (const Vector2d& p : pts) {
    box.min_x = std::min(box.min_x, p.x());
    box.min_y = std::min(box.min_y, p.y());
    box.max_x = std::max(box.max_x, p.x());
    box.max_y = std::max(box.max_y, p.y());
  }
  box.min_x = std::clamp(box.min_x, 0.0, w);
  box.max_x = std::clamp(box.max_x, 0.0, w);
  box.min_y = std::clamp(box.min_y, 0.0, h);
  box.max_y = std::clamp(box.max_y, 0.0, h);
  return box;
}

inline BBox ClipConicToImage(const DualConic& conic, ImageSize image) {
  return ClipEllipseToImage(EllipseFromDualConic(conic), image);
}

// Axis-aligned ellipse inscribed in a box.
inline Ellipse InscribedEllipse(const BBox& box) {
  return Ellipse(box.center(), box.width() / 2, box.height() / 2, 0.0);
}

}  // namespace ellipose
