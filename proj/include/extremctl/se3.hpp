#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace extremctl::se3 {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Unit quaternion kept on the w >= 0 half of the double cover.
///
/// Every constructor and operation renormalizes, so the stored quaternion has
/// unit norm to machine precision no matter how long a chain of compositions
/// produced it.
class Rotation {
 public:
  Rotation() : q_(Eigen::Quaterniond::Identity()) {}

  // Throws ZeroVector if the quaternion has (near) zero norm.
  static Rotation from_wxyz(double w, double x, double y, double z);
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  static Rotation from_axis_angle(const Vec3& axis, double angle_rad);
  static Rotation from_matrix(const Mat3& m);
  static Rotation identity() { return Rotation(); }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

  Mat3 matrix() const { return q_.toRotationMatrix(); }
  Rotation inverse() const;
  Vec3 apply(const Vec3& v) const { return q_ * v; }

  // Rotation angle in [0, pi].
  double angle() const;

  friend Rotation operator*(const Rotation& a, const Rotation& b);

 private:
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q) {}
  Eigen::Quaterniond q_;
};

// Angle of a^-1 * b, in [0, pi].
double angular_distance(const Rotation& a, const Rotation& b);

class Pose {
 public:
  Pose() : translation_(Vec3::Zero()) {}
  Pose(const Rotation& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return Pose(); }
  static Pose translate(double x, double y, double z) {
    return Pose(Rotation(), Vec3(x, y, z));
  }

  const Rotation& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 transform_point(const Vec3& p) const {
    return rotation_.apply(p) + translation_;
  }

 private:
  Rotation rotation_;
  Vec3 translation_;
};

// a * b as homogeneous transforms.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& a);
// inverse(base) * target, i.e. target expressed in the base frame.
Pose relative(const Pose& base, const Pose& target);

/// Minimal-angle rotation taking `from_axis` onto the direction of
/// `to_vector`; the rotation axis is normal to the plane spanned by the two.
///
/// Throws ZeroVector when |to_vector| <= 1e-9. When the two are
/// anti-parallel the rotation is a half turn about the first canonical axis
/// (x, then y, then z) that is not parallel to `from_axis`, projected to be
/// orthogonal to it.
Rotation align_axis(const Vec3& from_axis, const Vec3& to_vector);

}  // namespace extremctl::se3
