#include "slamacc/kinematics.hpp"

#include <cmath>

#include "slamacc/error.hpp"

namespace slamacc {

void ArmModel::validate() const {
  for (size_t i = 0; i < links.size(); ++i) {
    const DhLink& l = links[i];
    if (!std::isfinite(l.a_mm) || !std::isfinite(l.alpha_rad) ||
        !std::isfinite(l.d_mm) || !std::isfinite(l.theta0_rad))
      throw ValidationError("arm model: link " + std::to_string(i + 1) +
                            " has non-finite parameters");
  }
  if (!base_offset.is_rigid() || !tool_offset.is_rigid())
    throw ValidationError("arm model: base/tool offsets must have scale 1");
}

Pose link_transform(const DhLink& link, double angle_rad) {
  double theta = link.theta0_rad + angle_rad;
  Eigen::Quaterniond qz(Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()));
  Eigen::Quaterniond qx(Eigen::AngleAxisd(link.alpha_rad, Eigen::Vector3d::UnitX()));
  Eigen::Vector3d t(link.a_mm * std::cos(theta), link.a_mm * std::sin(theta), link.d_mm);
  return Pose(qz * qx, t, 1.0);
}

Pose forward_kinematics(const ArmModel& model, const JointAngles& angles) {
  model.validate();
  if (!angles.allFinite()) throw ValidationError("forward kinematics: non-finite joint angle");

  Pose g = Pose(model.base_offset.q(), model.base_offset.t(), 1.0);
  for (int i = 0; i < 7; ++i)
    g = compose(g, link_transform(model.links[static_cast<size_t>(i)], angles(i)));
  g = compose(g, Pose(model.tool_offset.q(), model.tool_offset.t(), 1.0));
  return Pose(g.q(), g.t(), 1.0, "gripper", "sawyer");
}

ArmModel default_synthetic_arm() {
  const double half_pi = 1.5707963267948966;
  ArmModel m;
  m.links = {{
      {0.0, -half_pi, 310.0, 0.0},
      {0.0, half_pi, 0.0, 0.0},
      {0.0, -half_pi, 400.0, 0.0},
      {0.0, half_pi, 0.0, 0.0},
      {0.0, -half_pi, 320.0, 0.0},
      {0.0, half_pi, 0.0, 0.0},
      {0.0, 0.0, 90.0, 0.0},
  }};
  m.base_offset = Pose::identity("", "sawyer");
  m.tool_offset = Pose::identity("gripper", "");
  return m;
}

}  // namespace slamacc
