#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace rotvote {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Per-frame camera rotation (A, B, C) about the camera x, y, z axes, in
/// radians. Used both as an axis-angle vector and as the Longuet-Higgins
/// angular displacement; the two agree to second order for small angles.
template <typename Scalar>
using RotationVec = Vector3<Scalar>;

template <typename Scalar>
Matrix3<Scalar> skew(const Vector3<Scalar>& v) {
  Matrix3<Scalar> s;
  s << Scalar(0), -v.z(), v.y(),
       v.z(), Scalar(0), -v.x(),
       -v.y(), v.x(), Scalar(0);
  return s;
}

/// Exponential map so(3) -> SO(3) (Rodrigues).
template <typename Scalar>
Matrix3<Scalar> so3_exp(const Vector3<Scalar>& w) {
  const Scalar theta = w.norm();
  const Matrix3<Scalar> k = skew(w);
  if (theta < Scalar(1e-8)) {
    // second-order Taylor expansion
    return Matrix3<Scalar>::Identity() + k + Scalar(0.5) * k * k;
  }
  const Scalar a = std::sin(theta) / theta;
  const Scalar b = (Scalar(1) - std::cos(theta)) / (theta * theta);
  return Matrix3<Scalar>::Identity() + a * k + b * k * k;
}

/// Logarithm map SO(3) -> so(3). Valid over the full [0, pi] range.
template <typename Scalar>
Vector3<Scalar> so3_log(const Matrix3<Scalar>& r) {
  // Eigen's AngleAxis handles the near-pi branch from the symmetric part.
  const Eigen::AngleAxis<Scalar> aa(r);
  return aa.angle() * aa.axis();
}

/// Rotation angle of a proper rotation matrix, clamped against round-off.
template <typename Scalar>
Scalar rotation_angle(const Matrix3<Scalar>& r) {
  using std::acos;
  Scalar c = (r.trace() - Scalar(1)) / Scalar(2);
  c = std::min(Scalar(1), std::max(Scalar(-1), c));
  return acos(c);
}

template <typename Scalar>
bool is_rotation(const Matrix3<Scalar>& r, Scalar tol = Scalar(1e-9)) {
  return (r.transpose() * r - Matrix3<Scalar>::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - Scalar(1)) <= tol;
}

constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace rotvote
