#pragma once

#include <array>

#include <Eigen/Core>

#include "slamacc/geom.hpp"

namespace slamacc {

using JointAngles = Eigen::Matrix<double, 7, 1>;

// One row of a Denavit-Hartenberg table, classic (distal) convention.
struct DhLink {
  double a_mm = 0.0;
  double alpha_rad = 0.0;
  double d_mm = 0.0;
  double theta0_rad = 0.0;
};

struct ArmModel {
  std::array<DhLink, 7> links;
  Pose base_offset = Pose::identity("", "sawyer");
  Pose tool_offset = Pose::identity("gripper", "");

  // Throws ValidationError on non-finite table entries or scaled offsets.
  void validate() const;
};

/// Rigid transform of one link at the given joint angle:
/// Rot_z(theta0 + angle) * Trans_z(d) * Trans_x(a) * Rot_x(alpha).
Pose link_transform(const DhLink& link, double angle_rad);

/// Gripper-to-base map G = base_offset * L1(A1) * ... * L7(A7) * tool_offset.
/// The result is rigid (s = 1) and labeled "gripper" -> "sawyer".
Pose forward_kinematics(const ArmModel& model, const JointAngles& angles);

/// The arm used by the shipped configs and the synthetic dataset generator:
/// seven z-offset links with alternating +-90 degree twists, unit offsets
/// elsewhere. Arbitrary but fixed; not a real robot's table.
ArmModel default_synthetic_arm();

}  // namespace slamacc
