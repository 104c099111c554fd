#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "rotvote/errors.hpp"
#include "rotvote/so3.hpp"

// Camera frame: x right, y down, z forward. Image coordinates handed to the
// Longuet-Higgins routines are relative to the principal point.

namespace rotvote {

struct CameraIntrinsics {
  double f = 0.0;   ///< focal length in pixels
  double cx = 0.0;  ///< principal point, pixels
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool valid() const {
    return std::isfinite(f) && f > 0.0 && width > 0 && height > 0 && cx >= 0.0 && cx < width &&
           cy >= 0.0 && cy < height;
  }

  /// Intrinsics for the same camera resampled by `factor` (e.g. 0.25 for
  /// 1920x1080 -> 480x270). Flow magnitudes scale by the same factor.
  CameraIntrinsics scaled(double factor) const {
    return {f * factor, cx * factor, cy * factor,
            static_cast<int>(std::lround(width * factor)),
            static_cast<int>(std::lround(height * factor))};
  }
};

/// One flow vector. (x, y) relative to the principal point, (u, v) in
/// pixels per frame.
struct FlowSample {
  double x = 0.0;
  double y = 0.0;
  double u = 0.0;
  double v = 0.0;

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(u) && std::isfinite(v);
  }
};

/// The straight line of rotations compatible with one flow vector under the
/// Longuet-Higgins model: p0 + t * dir, with p0 on the plane C = 0.
struct CompatLine {
  Vector3<double> dir;
  Vector3<double> p0;

  Vector3<double> at(double t) const { return p0 + t * dir; }
};

/// Unit ray through pixel `px` (absolute pixel coordinates).
template <typename Scalar>
Vector3<Scalar> backproject(const Vector2<Scalar>& px, const CameraIntrinsics& k) {
  const Scalar f(k.f);
  return Vector3<Scalar>((px.x() - Scalar(k.cx)) / f, (px.y() - Scalar(k.cy)) / f, Scalar(1))
      .normalized();
}

/// Unit ray through the principal-point-relative position (x, y).
template <typename Scalar>
Vector3<Scalar> ray_from_offset(Scalar x, Scalar y, Scalar f) {
  return Vector3<Scalar>(x / f, y / f, Scalar(1)).normalized();
}

/// Pixel position (absolute) that the ray `dir` projects to.
template <typename Scalar>
Vector2<Scalar> project(const Vector3<Scalar>& dir, const CameraIntrinsics& k) {
  return Vector2<Scalar>(Scalar(k.f) * dir.x() / dir.z() + Scalar(k.cx),
                         Scalar(k.f) * dir.y() / dir.z() + Scalar(k.cy));
}

/// Rotation about unit `axis` by `theta` radians.
template <typename Scalar>
Matrix3<Scalar> rotation_about_axis(const Vector3<Scalar>& axis, Scalar theta) {
  return so3_exp<Scalar>(axis * theta);
}

/// Shortest rotation taking unit vector p onto unit vector q: axis p x q,
/// angle arccos(p . q). Throws DegenerateInput for antipodal inputs.
template <typename Scalar>
Matrix3<Scalar> rotation_from_to(const Vector3<Scalar>& p, const Vector3<Scalar>& q) {
  const Vector3<Scalar> axis = p.cross(q);
  const Scalar s = axis.norm();
  const Scalar c = p.dot(q);
  if (s < Scalar(1e-12)) {
    if (c > Scalar(0)) return Matrix3<Scalar>::Identity();
    throw DegenerateInput("rotation_from_to: antipodal vectors, rotation axis undefined");
  }
  return rotation_about_axis<Scalar>(axis / s, std::atan2(s, c));
}

/// Samples of the perspective manifold of rotations compatible with `s`:
/// for every theta, the rotation whose inverse maps the ray through p onto
/// the ray through q = p + (u, v), composed as rotation about q by theta
/// after the minimal p -> q rotation. Returned as camera rotation vectors
/// (the same (A, B, C) convention as the Longuet-Higgins line).
template <typename Scalar>
std::vector<RotationVec<Scalar>> perspective_manifold(const FlowSample& s, const CameraIntrinsics& k,
                                                      std::span<const Scalar> thetas) {
  const Scalar f(k.f);
  const Vector3<Scalar> p = ray_from_offset<Scalar>(Scalar(s.x), Scalar(s.y), f);
  const Vector3<Scalar> q =
      ray_from_offset<Scalar>(Scalar(s.x + s.u), Scalar(s.y + s.v), f);
  const Matrix3<Scalar> base = rotation_from_to<Scalar>(p, q);

  std::vector<RotationVec<Scalar>> out;
  out.reserve(thetas.size());
  for (const Scalar theta : thetas) {
    const Matrix3<Scalar> points = rotation_about_axis<Scalar>(q, theta) * base;
    // Scene points move by the inverse of the camera rotation.
    out.push_back(so3_log<Scalar>(Matrix3<Scalar>(points.transpose())));
  }
  return out;
}

/// Normals of the two planes in (A, B, C) space defined by the rotational
/// flow equations at (x, y): n_u . (A, B, C) = u, n_v . (A, B, C) = v.
template <typename Scalar>
std::pair<Vector3<Scalar>, Vector3<Scalar>> lh_plane_normals(Scalar x, Scalar y, Scalar f) {
  return {Vector3<Scalar>(x * y / f, -(f * f + x * x) / f, y),
          Vector3<Scalar>((f * f + y * y) / f, -x * y / f, -x)};
}

/// Direction n_u x n_v of the compatible line at (x, y). Its z component is
/// f^2 + x^2 + y^2, so it never lies in the plane C = 0.
template <typename Scalar>
Vector3<Scalar> lh_direction(Scalar x, Scalar y, Scalar f) {
  const auto [nu, nv] = lh_plane_normals<Scalar>(x, y, f);
  return nu.cross(nv);
}

/// Compatible line with a known direction; only the C = 0 intercept depends
/// on the flow.
inline CompatLine lh_line(const FlowSample& s, double f, const Vector3<double>& dir) {
  const double x = s.x;
  const double y = s.y;
  // 2x2 system with C = 0; determinant is f^2 + x^2 + y^2.
  const double det = f * f + x * x + y * y;
  const double a = (s.v * (f * f + x * x) - s.u * x * y) / (f * det);
  const double b = (s.v * x * y - s.u * (f * f + y * y)) / (f * det);
  return {dir, Vector3<double>(a, b, 0.0)};
}

inline CompatLine lh_line(const FlowSample& s, double f) {
  return lh_line(s, f, lh_direction<double>(s.x, s.y, f));
}

/// Line directions for a fixed set of principal-point-relative positions.
template <typename Scalar>
std::vector<Vector3<Scalar>> precompute_directions(std::span<const Vector2<Scalar>> grid, Scalar f) {
  std::vector<Vector3<Scalar>> table;
  table.reserve(grid.size());
  for (const auto& p : grid) table.push_back(lh_direction<Scalar>(p.x(), p.y(), f));
  return table;
}

}  // namespace rotvote
