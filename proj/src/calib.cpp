#include "slamacc/calib.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "slamacc/error.hpp"
#include "slamacc/rng.hpp"

namespace slamacc {

namespace {

constexpr double kJacobianStep = 1e-6;
constexpr double kStepTol = 1e-10;
constexpr double kRelDecreaseTol = 1e-12;
constexpr double kMaxDamping = 1e12;

Twist slice_twist(const Eigen::VectorXd& x, int offset, bool scale_free) {
  Twist xi;
  xi.omega = x.segment<3>(offset);
  xi.v = x.segment<3>(offset + 3);
  xi.sigma = scale_free ? x(offset + 6) : 0.0;
  return xi;
}

std::pair<Pose, Pose> step_poses(const Pose& T1, const Pose& T2, const Eigen::VectorXd& x,
                                 bool scale_free) {
  int block = scale_free ? 7 : 6;
  return {retract(T1, slice_twist(x, 0, scale_free)),
          retract(T2, slice_twist(x, block, scale_free))};
}

// Gripper rotations must exercise at least two distinct axes, otherwise the
// hand-eye problem is rank deficient.
void check_rotation_diversity(const std::vector<Pose>& grips) {
  std::vector<Eigen::Vector3d> axes;
  for (size_t i = 1; i < grips.size(); ++i) {
    Eigen::Vector3d rel = quat_log(grips[0].q().conjugate() * grips[i].q());
    double angle = rel.norm();
    if (angle > 1e-3) axes.push_back(rel / angle);
  }
  for (size_t i = 0; i < axes.size(); ++i) {
    for (size_t j = i + 1; j < axes.size(); ++j) {
      double c = std::min(std::abs(axes[i].dot(axes[j])), 1.0);
      if (std::acos(c) > 1e-3) return;
    }
  }
  throw ValidationError(
      "solve_extrinsics: gripper rotations are coaxial; the two transforms "
      "are not identifiable from this motion");
}

struct LmRun {
  Pose T1, T2;
  double objective = 0.0;
  double rms = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

LmRun run_lm(Pose T1, Pose T2, const std::vector<CalibSample>& samples,
             const ArmModel& model, const SolveOptions& opts) {
  int block = opts.scale_free ? 7 : 6;
  int dim = 2 * block;

  auto residual = [&](const Pose& a, const Pose& b) {
    return residual_vector(a, b, samples, model, opts.rho, opts.scale_free);
  };

  LmRun run;
  run.T1 = T1;
  run.T2 = T2;
  Eigen::VectorXd r = residual(T1, T2);
  double f = 0.5 * r.squaredNorm();
  run.trace.push_back(f);

  double mu = 1e-3;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    // Central-difference Jacobian around the current estimate.
    Eigen::MatrixXd J(r.size(), dim);
    for (int k = 0; k < dim; ++k) {
      Eigen::VectorXd dx = Eigen::VectorXd::Zero(dim);
      dx(k) = kJacobianStep;
      auto [p1, p2] = step_poses(run.T1, run.T2, dx, opts.scale_free);
      Eigen::VectorXd rp = residual(p1, p2);
      dx(k) = -kJacobianStep;
      auto [m1, m2] = step_poses(run.T1, run.T2, dx, opts.scale_free);
      Eigen::VectorXd rm = residual(m1, m2);
      J.col(k) = (rp - rm) / (2.0 * kJacobianStep);
    }
    Eigen::MatrixXd jtj = J.transpose() * J;
    Eigen::VectorXd g = J.transpose() * r;

    bool accepted = false;
    while (mu <= kMaxDamping) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += mu;
      Eigen::VectorXd delta = a.ldlt().solve(-g);

      auto [c1, c2] = step_poses(run.T1, run.T2, delta, opts.scale_free);
      Eigen::VectorXd rc = residual(c1, c2);
      double fc = 0.5 * rc.squaredNorm();
      if (fc < f) {
        run.T1 = c1;
        run.T2 = c2;
        r = rc;
        double decrease = (f - fc) / std::max(f, 1e-300);
        f = fc;
        run.trace.push_back(f);
        mu = std::max(mu / 10.0, 1e-12);
        ++run.iterations;
        accepted = true;
        if (delta.norm() < kStepTol || decrease < kRelDecreaseTol) run.converged = true;
        break;
      }
      mu *= 10.0;
    }
    if (!accepted) {
      // Damping exhausted: no direction improves, treat as converged.
      run.converged = true;
      break;
    }
    if (run.converged) break;
  }

  run.objective = f;
  run.rms = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  return run;
}

}  // namespace

Pose predict_camera_pose(const Pose& T1, const Pose& T2, const ArmModel& model,
                         const JointAngles& angles) {
  return compose(T1, compose(forward_kinematics(model, angles), T2));
}

Eigen::VectorXd residual_vector(const Pose& T1, const Pose& T2,
                                const std::vector<CalibSample>& samples,
                                const ArmModel& model, double rho, bool scale_free) {
  if (samples.empty()) throw ValidationError("residual_vector: no calibration samples");
  int block = scale_free ? 7 : 6;
  Eigen::VectorXd r(block * static_cast<int>(samples.size()));
  for (size_t i = 0; i < samples.size(); ++i) {
    Pose pred = predict_camera_pose(T1, T2, model, samples[i].angles);
    r.segment(static_cast<int>(i) * block, block) =
        pose_residual(pred, samples[i].pose_calib, rho, scale_free);
  }
  return r;
}

ExtrinsicsPair solve_extrinsics(const std::vector<CalibSample>& samples,
                                const ArmModel& model, const SolveOptions& opts) {
  if (samples.size() < 3)
    throw ValidationError("solve_extrinsics: need at least 3 samples, got " +
                          std::to_string(samples.size()));
  for (size_t i = 0; i < samples.size(); ++i)
    if (!samples[i].pose_calib.is_rigid(1e-9))
      throw ValidationError("solve_extrinsics: sample " + std::to_string(i) +
                            " has a scaled calibration pose");

  std::vector<Pose> grips;
  grips.reserve(samples.size());
  for (const CalibSample& s : samples)
    grips.push_back(forward_kinematics(model, s.angles));
  check_rotation_diversity(grips);

  // Plain start: T2 = identity, T1 solved from the first sample's chain.
  Pose t2_init = Pose::identity("camera", "gripper");
  Pose t1_init = compose(samples[0].pose_calib, inverse(compose(grips[0], t2_init)));

  LmRun best;
  int best_index = -1;
  for (int start = 0; start <= opts.restarts; ++start) {
    Pose t1 = t1_init;
    Pose t2 = t2_init;
    if (start > 0) {
      Rng rng(opts.seed, static_cast<uint64_t>(start));
      auto perturb = [&rng](const Pose& p) {
        Eigen::Vector3d axis = rng.unit_vector3();
        double angle = rng.uniform(0.0, 0.6);
        Eigen::Quaterniond dq(Eigen::AngleAxisd(angle, axis));
        return Pose(dq * p.q(), p.t(), p.s(), p.source(), p.target());
      };
      t1 = perturb(t1);
      t2 = perturb(t2);
    }
    LmRun run = run_lm(t1, t2, samples, model, opts);
    if (best_index < 0 || run.objective < best.objective) {
      best = run;
      best_index = start;
    }
  }

  ExtrinsicsPair out;
  out.T1 = best.T1;
  out.T2 = best.T2;
  out.final_rms_mm = best.rms;
  out.iterations = best.iterations;
  out.converged = best.converged;
  out.restart_index = best_index;
  out.objective_trace = best.trace;
  return out;
}

}  // namespace slamacc
