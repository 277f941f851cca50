#include "extremctl/se3.hpp"

#include <algorithm>
#include <cmath>

#include "extremctl/error.hpp"

namespace extremctl::se3 {
namespace {

Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  const double n = q.norm();
  if (!(n > 1e-12) || !std::isfinite(n)) {
    throw Error(ErrorCode::kZeroVector, "quaternion has zero or non-finite norm");
  }
  q.coeffs() /= n;
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

Rotation Rotation::from_wxyz(double w, double x, double y, double z) {
  return Rotation(canonical(Eigen::Quaterniond(w, x, y, z)));
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation(canonical(q));
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (!(n > 1e-12)) {
    throw Error(ErrorCode::kZeroVector, "rotation axis has zero norm");
  }
  return Rotation(canonical(Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis / n))));
}

Rotation Rotation::from_matrix(const Mat3& m) {
  return Rotation(canonical(Eigen::Quaterniond(m)));
}

Rotation Rotation::inverse() const { return Rotation(q_.conjugate()); }

double Rotation::angle() const {
  const double v = q_.vec().norm();
  return 2.0 * std::atan2(v, std::abs(q_.w()));
}

Rotation operator*(const Rotation& a, const Rotation& b) {
  return Rotation(canonical(a.q_ * b.q_));
}

double angular_distance(const Rotation& a, const Rotation& b) {
  return (a.inverse() * b).angle();
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation() * b.rotation(),
              a.rotation().apply(b.translation()) + a.translation());
}

Pose inverse(const Pose& a) {
  const Rotation inv = a.rotation().inverse();
  return Pose(inv, -inv.apply(a.translation()));
}

Pose relative(const Pose& base, const Pose& target) {
  const Rotation inv = base.rotation().inverse();
  return Pose(inv * target.rotation(),
              inv.apply(target.translation() - base.translation()));
}

Rotation align_axis(const Vec3& from_axis, const Vec3& to_vector) {
  const double to_norm = to_vector.norm();
  if (!(to_norm > 1e-9)) {
    throw Error(ErrorCode::kZeroVector, "align_axis: target vector has norm <= 1e-9");
  }
  const double from_norm = from_axis.norm();
  if (!(from_norm > 1e-12)) {
    throw Error(ErrorCode::kZeroVector, "align_axis: source axis has zero norm");
  }
  const Vec3 u = from_axis / from_norm;
  const Vec3 v = to_vector / to_norm;
  const double c = std::clamp(u.dot(v), -1.0, 1.0);
  const Vec3 cross = u.cross(v);
  const double s = cross.norm();

  if (s < 1e-12 && c > 0.0) return Rotation();
  if (s < 1e-12) {
    for (int i = 0; i < 3; ++i) {
      const Vec3 e = Vec3::Unit(i);
      const Vec3 axis = e - e.dot(u) * u;
      if (axis.norm() > 1e-6) return Rotation::from_axis_angle(axis, M_PI);
    }
  }
  // Half-angle construction: q = (1 + c, u x v) normalized, exact for all
  // non-antiparallel pairs and well conditioned near identity.
  return Rotation::from_wxyz(1.0 + c, cross.x(), cross.y(), cross.z());
}

}  // namespace extremctl::se3
