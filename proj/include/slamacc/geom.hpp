#pragma once

#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace slamacc {

// Tangent-space increment for a similarity transform: rotation part in rad,
// translation part in mm, log-scale. sigma stays 0 when scale is frozen.
struct Twist {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  double sigma = 0.0;

  double norm() const {
    return std::sqrt(omega.squaredNorm() + v.squaredNorm() + sigma * sigma);
  }
};

/// Similarity transform mapping points from `source` space to `target` space:
/// x -> s * R(q) * x + t.  Immutable after construction; the quaternion is
/// renormalized and s > 0 is enforced.  Space labels are checked when poses
/// are chained; an empty label acts as a wildcard.
class Pose {
 public:
  Pose();  // identity, unlabeled

  Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t, double s,
       std::string source = "", std::string target = "");

  static Pose identity(std::string source = "", std::string target = "");

  const Eigen::Quaterniond& q() const { return q_; }
  const Eigen::Vector3d& t() const { return t_; }
  double s() const { return s_; }
  const std::string& source() const { return source_; }
  const std::string& target() const { return target_; }

  Eigen::Matrix3d rotation() const { return q_.toRotationMatrix(); }

  // Homogeneous 4x4 with the scale folded into the linear block.
  Eigen::Matrix4d matrix() const;

  bool is_rigid(double tol = 1e-12) const { return std::abs(s_ - 1.0) <= tol; }

 private:
  Eigen::Quaterniond q_;
  Eigen::Vector3d t_;
  double s_ = 1.0;
  std::string source_;
  std::string target_;
};

/// a after b: (a ∘ b)(x) = a(b(x)).  Requires a.source == b.target when both
/// labels are set.
Pose compose(const Pose& a, const Pose& b);

Pose inverse(const Pose& p);

Eigen::Vector3d transform_point(const Pose& p, const Eigen::Vector3d& x);

/// Left-multiplicative update p <- exp(xi) ∘ p, where exp applies the
/// axis-angle exponential to omega and takes v and sigma directly as
/// translation and log-scale.
Pose retract(const Pose& p, const Twist& xi);

/// Weighted difference between two poses sharing space labels:
/// [t_pred - t_meas; rho * axis_angle(R_meas^T R_pred)] in mm, with an
/// optional rho_s * ln(s_pred / s_meas) component when scale_free is set.
/// rho_s defaults to rho when negative.
Eigen::VectorXd pose_residual(const Pose& pred, const Pose& meas, double rho,
                              bool scale_free = false, double rho_s = -1.0);

// Axis-angle helpers shared with the calibration solver.
Eigen::Quaterniond quat_exp(const Eigen::Vector3d& omega);
Eigen::Vector3d quat_log(const Eigen::Quaterniond& q);

}  // namespace slamacc
