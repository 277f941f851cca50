#include "extremctl/mapping.hpp"

#include <cmath>
#include <string>

#include "extremctl/error.hpp"

namespace extremctl::mapping {
namespace {

constexpr double kMinPelvisHeight = 0.3;
constexpr double kMinArmLength = 0.1;
constexpr std::array<Side, 2> kSides = {Side::kLeft, Side::kRight};

std::size_t idx(Side s) { return static_cast<std::size_t>(s); }
std::size_t idx(Link l) { return static_cast<std::size_t>(l); }

}  // namespace

void RobotModel::validate() const {
  if (!(pelvis_height > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "robot pelvis_height must be positive");
  }
  for (Side s : kSides) {
    if (!(side(s).arm_length > 0.0)) {
      throw Error(ErrorCode::kConfigInvalid, "robot arm_length must be positive");
    }
  }
}

void CalibrationProfile::validate() const {
  robot.validate();
  if (!(human.pelvis_height > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "human pelvis_height must be positive");
  }
  for (double l : human.arm_length) {
    if (!(l > 0.0)) throw Error(ErrorCode::kConfigInvalid, "human arm_length must be positive");
  }
  const double s = scale();
  if (!std::isfinite(s) || !(s > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "pelvis height ratio must be finite and positive");
  }
}

Pose torso_anchor(const Rotation& torso_orientation, const Vec3& pelvis_position) {
  return Pose(torso_orientation, pelvis_position);
}

CalibrationProfile calibrate(const LinkSet& human_neutral, const RobotModel& robot) {
  robot.validate();
  CalibrationProfile profile;
  profile.robot = robot;

  const double z_h = human_neutral[Link::kPelvis].translation().z();
  if (!(z_h > kMinPelvisHeight)) {
    throw Error(ErrorCode::kDegenerateNeutral,
                "neutral pelvis height " + std::to_string(z_h) + " m is implausible");
  }
  profile.human.pelvis_height = z_h;

  for (std::size_t i = 0; i < kLinkCount; ++i) {
    profile.rot_offsets[i] =
        human_neutral.poses[i].rotation().inverse() * robot.neutral_orientation[i];
  }

  const Rotation torso = human_neutral[Link::kTorso].rotation() * profile.rot_offsets[idx(Link::kTorso)];
  const Pose anchor = torso_anchor(torso, human_neutral[Link::kPelvis].translation());
  const double s = robot.pelvis_height / z_h;

  for (Side side : kSides) {
    const Vec3 hand = se3::inverse(anchor).transform_point(human_neutral[hand_of(side)].translation());
    if (!(hand.x() > kMinArmLength)) {
      throw Error(ErrorCode::kDegenerateNeutral,
                  "neutral arm length " + std::to_string(hand.x()) + " m is implausible");
    }
    profile.human.arm_length[idx(side)] = hand.x();
    profile.human.shoulder[idx(side)] = Vec3(0.0, hand.y(), hand.z());
    profile.foot_offset[idx(side)] =
        robot.side(side).neutral_foot - s * human_neutral[foot_of(side)].translation();
  }
  return profile;
}

LinkSet map_frame(const CalibrationProfile& profile, const LinkSet& human) {
  const double s = profile.scale();
  const auto& off = profile.rot_offsets;
  const RobotModel& robot = profile.robot;
  LinkSet out;

  const Rotation pelvis_rot = human[Link::kPelvis].rotation() * off[idx(Link::kPelvis)];
  const Vec3 pelvis_pos = s * human[Link::kPelvis].translation();
  out[Link::kPelvis] = Pose(pelvis_rot, pelvis_pos);

  const Rotation torso_rot = human[Link::kTorso].rotation() * off[idx(Link::kTorso)];
  out[Link::kTorso] = Pose(torso_rot, pelvis_pos + pelvis_rot.apply(robot.pelvis_to_torso));

  const Pose human_anchor = torso_anchor(torso_rot, human[Link::kPelvis].translation());
  const Pose robot_anchor = torso_anchor(torso_rot, pelvis_pos);

  for (Side side : kSides) {
    const std::size_t k = idx(side);
    const Link foot = foot_of(side);
    out[foot] = Pose(human[foot].rotation() * off[idx(foot)],
                     s * human[foot].translation() + profile.foot_offset[k]);

    const Link hand = hand_of(side);
    const Vec3 rel = se3::inverse(human_anchor).transform_point(human[hand].translation());
    const double reach = robot.side(side).arm_length / profile.human.arm_length[k];
    const Vec3 target = robot.side(side).shoulder + reach * (rel - profile.human.shoulder[k]);
    out[hand] = Pose(human[hand].rotation() * off[idx(hand)], robot_anchor.transform_point(target));
  }
  return out;
}

LinkSet robot_neutral(const RobotModel& robot, const Eigen::Vector2d& pelvis_xy) {
  const auto& rot = robot.neutral_orientation;
  LinkSet out;
  const Vec3 pelvis_pos(pelvis_xy.x(), pelvis_xy.y(), robot.pelvis_height);
  const Rotation& pelvis_rot = rot[idx(Link::kPelvis)];
  const Rotation& torso_rot = rot[idx(Link::kTorso)];
  out[Link::kPelvis] = Pose(pelvis_rot, pelvis_pos);
  out[Link::kTorso] = Pose(torso_rot, pelvis_pos + pelvis_rot.apply(robot.pelvis_to_torso));
  for (Side side : kSides) {
    const ArmModel& arm = robot.side(side);
    out[hand_of(side)] =
        Pose(rot[idx(hand_of(side))],
             pelvis_pos + torso_rot.apply(arm.shoulder + Vec3(arm.arm_length, 0.0, 0.0)));
    out[foot_of(side)] = Pose(rot[idx(foot_of(side))], arm.neutral_foot);
  }
  return out;
}

Rotation torso_from_headset(const Pose& pelvis, const Vec3& headset_position) {
  const Vec3 local = pelvis.rotation().inverse().apply(headset_position - pelvis.translation());
  if (!(local.norm() > 1e-6)) {
    throw Error(ErrorCode::kDegenerateHeadset, "headset coincides with the pelvis");
  }
  return se3::align_axis(Vec3::UnitZ(), local);
}

RobotModel reference_robot() {
  RobotModel r;
  r.pelvis_height = 0.75;
  r.pelvis_to_torso = Vec3(0.0, 0.0, 0.25);
  r.side(Side::kLeft) = {Vec3(0.0, 0.18, 0.35), 0.45, Vec3(0.0, 0.1, 0.0)};
  r.side(Side::kRight) = {Vec3(0.0, -0.18, 0.35), 0.45, Vec3(0.0, -0.1, 0.0)};
  return r;
}

LinkSet reference_human_neutral(double scale) {
  LinkSet h;
  h[Link::kPelvis] = Pose::translate(0.0, 0.0, 1.0 * scale);
  h[Link::kTorso] = Pose::translate(0.0, 0.0, 1.3 * scale);
  h[Link::kLeftHand] = Pose::translate(0.6 * scale, 0.2 * scale, 1.45 * scale);
  h[Link::kRightHand] = Pose::translate(0.6 * scale, -0.2 * scale, 1.45 * scale);
  h[Link::kLeftFoot] = Pose::translate(0.0, 0.12 * scale, 0.0);
  h[Link::kRightFoot] = Pose::translate(0.0, -0.12 * scale, 0.0);
  return h;
}

}  // namespace extremctl::mapping
