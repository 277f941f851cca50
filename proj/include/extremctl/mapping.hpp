#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "extremctl/se3.hpp"

namespace extremctl::mapping {

using se3::Pose;
using se3::Rotation;
using se3::Vec3;

enum class Link : std::size_t {
  kPelvis = 0,
  kTorso,
  kLeftHand,
  kRightHand,
  kLeftFoot,
  kRightFoot,
};

inline constexpr std::size_t kLinkCount = 6;
inline constexpr std::array<std::string_view, kLinkCount> kLinkNames = {
    "pelvis", "torso", "left_hand", "right_hand", "left_foot", "right_foot"};

enum class Side : std::size_t { kLeft = 0, kRight = 1 };

inline constexpr Link hand_of(Side s) {
  return s == Side::kLeft ? Link::kLeftHand : Link::kRightHand;
}
inline constexpr Link foot_of(Side s) {
  return s == Side::kLeft ? Link::kLeftFoot : Link::kRightFoot;
}

// The six tracked links, world frame, meters.
struct LinkSet {
  std::array<Pose, kLinkCount> poses{};

  Pose& operator[](Link l) { return poses[static_cast<std::size_t>(l)]; }
  const Pose& operator[](Link l) const { return poses[static_cast<std::size_t>(l)]; }
};

struct ArmModel {
  Vec3 shoulder = Vec3::Zero();  // pelvis frame
  double arm_length = 0.0;
  Vec3 neutral_foot = Vec3::Zero();  // world, robot standing at the origin
};

// Constants read off the humanoid kinematic model.
struct RobotModel {
  double pelvis_height = 0.0;
  Vec3 pelvis_to_torso = Vec3::Zero();
  std::array<ArmModel, 2> sides{};  // indexed by Side
  // Link orientations of the robot in its neutral stance.
  std::array<Rotation, kLinkCount> neutral_orientation{};

  const ArmModel& side(Side s) const { return sides[static_cast<std::size_t>(s)]; }
  ArmModel& side(Side s) { return sides[static_cast<std::size_t>(s)]; }

  // Throws ConfigInvalid when a length is non-positive.
  void validate() const;
};

struct HumanAnthropometrics {
  double pelvis_height = 0.0;
  std::array<Vec3, 2> shoulder{};    // torso-anchored frame
  std::array<double, 2> arm_length{};
};

struct CalibrationProfile {
  std::array<Rotation, kLinkCount> rot_offsets{};
  HumanAnthropometrics human;
  std::array<Vec3, 2> foot_offset{};  // delta per side
  RobotModel robot;

  double scale() const { return robot.pelvis_height / human.pelvis_height; }
  void validate() const;
};

/// One-shot calibration from the prescribed neutral stance (arms straight
/// forward along +x, feet on the ground).
///
/// The shoulder and arm length are read from each hand expressed in the
/// torso-anchored frame (robot-convention torso orientation placed at the
/// pelvis position; for an upright neutral stance this is the pelvis frame):
/// arm length is the forward component and the shoulder is the same point
/// with its forward component zeroed. Throws DegenerateNeutral for a pelvis
/// lower than 0.3 m or an arm shorter than 0.1 m.
CalibrationProfile calibrate(const LinkSet& human_neutral, const RobotModel& robot);

/// Per-frame mapping from tracked human links to humanoid link targets.
///
/// Pure function of (profile, frame): pelvis and feet positions scale by the
/// pelvis height ratio (feet then add their offset), the torso rides on the
/// pelvis at the model's pelvis-to-torso displacement, and each hand keeps
/// its shoulder-relative direction with the reach rescaled from human to
/// robot arm length. Every orientation is the human one right-composed with
/// the link's calibration offset.
LinkSet map_frame(const CalibrationProfile& profile, const LinkSet& human);

// Robot stance that map_frame reproduces for the calibration pose: the model
// neutral with its pelvis placed at `pelvis_xy` (the scaled human pelvis).
LinkSet robot_neutral(const RobotModel& robot, const Eigen::Vector2d& pelvis_xy = Eigen::Vector2d::Zero());

// Frame in which hands are expressed: torso orientation at the pelvis origin.
Pose torso_anchor(const Rotation& torso_orientation, const Vec3& pelvis_position);

/// Torso orientation, relative to the pelvis, estimated from the headset
/// position alone: the rotation taking the pelvis z axis onto the
/// pelvis-to-headset direction. The headset orientation is never used.
/// Throws DegenerateHeadset when the headset coincides with the pelvis.
Rotation torso_from_headset(const Pose& pelvis, const Vec3& headset_position);

// A small humanoid (0.75 m pelvis) with identity link orientations.
RobotModel reference_robot();

// Upright operator in the calibration stance, standing at the origin and
// facing +x. `scale` multiplies every position.
LinkSet reference_human_neutral(double scale = 1.0);

}  // namespace extremctl::mapping
