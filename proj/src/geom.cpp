#include "slamacc/geom.hpp"

#include <cmath>

#include "slamacc/error.hpp"

namespace slamacc {

namespace {

// Labels match if either is empty (wildcard) or they are equal.
bool labels_compatible(const std::string& a, const std::string& b) {
  return a.empty() || b.empty() || a == b;
}

std::string pick_label(const std::string& preferred, const std::string& fallback) {
  return preferred.empty() ? fallback : preferred;
}

}  // namespace

Pose::Pose() : q_(Eigen::Quaterniond::Identity()), t_(Eigen::Vector3d::Zero()) {}

Pose::Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t, double s,
           std::string source, std::string target)
    : q_(q), t_(t), s_(s), source_(std::move(source)), target_(std::move(target)) {
  if (!(s_ > 0.0) || !std::isfinite(s_))
    throw ValidationError("pose scale must be finite and > 0, got " + std::to_string(s_));
  double n = q_.norm();
  if (!(n > 1e-12) || !std::isfinite(n))
    throw ValidationError("pose quaternion must be nonzero and finite");
  q_.normalize();
  if (!t_.allFinite()) throw ValidationError("pose translation must be finite");
}

Pose Pose::identity(std::string source, std::string target) {
  return Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero(), 1.0,
              std::move(source), std::move(target));
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = s_ * q_.toRotationMatrix();
  m.topRightCorner<3, 1>() = t_;
  return m;
}

Pose compose(const Pose& a, const Pose& b) {
  if (!labels_compatible(a.source(), b.target()))
    throw ValidationError("compose: inner space labels disagree: '" + a.source() +
                          "' vs '" + b.target() + "'");
  Eigen::Quaterniond q = a.q() * b.q();
  Eigen::Vector3d t = a.s() * (a.q() * b.t()) + a.t();
  return Pose(q, t, a.s() * b.s(), pick_label(b.source(), a.source()),
              pick_label(a.target(), b.target()));
}

Pose inverse(const Pose& p) {
  double s_inv = 1.0 / p.s();
  Eigen::Quaterniond q_inv = p.q().conjugate();
  Eigen::Vector3d t_inv = -s_inv * (q_inv * p.t());
  return Pose(q_inv, t_inv, s_inv, p.target(), p.source());
}

Eigen::Vector3d transform_point(const Pose& p, const Eigen::Vector3d& x) {
  return p.s() * (p.q() * x) + p.t();
}

Pose retract(const Pose& p, const Twist& xi) {
  Pose delta(quat_exp(xi.omega), xi.v, std::exp(xi.sigma));
  Pose r = compose(delta, p);
  return Pose(r.q(), r.t(), r.s(), p.source(), p.target());
}

Eigen::VectorXd pose_residual(const Pose& pred, const Pose& meas, double rho,
                              bool scale_free, double rho_s) {
  if (!labels_compatible(pred.source(), meas.source()) ||
      !labels_compatible(pred.target(), meas.target()))
    throw ValidationError("pose_residual: poses relate different spaces");
  if (rho_s < 0.0) rho_s = rho;
  Eigen::VectorXd r(scale_free ? 7 : 6);
  r.head<3>() = pred.t() - meas.t();
  r.segment<3>(3) = rho * quat_log(meas.q().conjugate() * pred.q());
  if (scale_free) r(6) = rho_s * std::log(pred.s() / meas.s());
  return r;
}

Eigen::Quaterniond quat_exp(const Eigen::Vector3d& omega) {
  double theta = omega.norm();
  double half = 0.5 * theta;
  // sin(half)/theta, stable as theta -> 0.
  double k = theta < 1e-8 ? 0.5 - theta * theta / 48.0 : std::sin(half) / theta;
  return Eigen::Quaterniond(std::cos(half), k * omega.x(), k * omega.y(), k * omega.z());
}

Eigen::Vector3d quat_log(const Eigen::Quaterniond& q) {
  // Fold to the hemisphere with w >= 0 so the angle lands in [0, pi].
  Eigen::Quaterniond u = q.w() < 0.0 ? Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z()) : q;
  Eigen::Vector3d vec(u.x(), u.y(), u.z());
  double vn = vec.norm();
  if (vn < 1e-12) return 2.0 * vec;
  double angle = 2.0 * std::atan2(vn, u.w());
  return (angle / vn) * vec;
}

}  // namespace slamacc
