#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "slamacc/geom.hpp"
#include "slamacc/kinematics.hpp"

namespace slamacc {

// One calibration observation: the arm's joint vector and the camera pose
// measured against the calibration pattern at the same instant.
struct CalibSample {
  JointAngles angles = JointAngles::Zero();
  Pose pose_calib;  // camera to pattern, scale 1
  int64_t t_ns = 0;
};

struct ExtrinsicsPair {
  Pose T1;  // robot base to pattern
  Pose T2;  // camera to gripper
  double final_rms_mm = 0.0;
  int iterations = 0;
  bool converged = false;
  int restart_index = 0;
  // Objective (0.5 * ||r||^2) after each accepted step of the winning
  // start, starting with the initial value.
  std::vector<double> objective_trace;
};

struct SolveOptions {
  double rho = 100.0;      // rotation weight, mm per rad
  bool scale_free = false; // also optimize the two Sim(3) scales
  int max_iter = 100;
  int restarts = 8;        // perturbed starts tried after the plain one
  uint64_t seed = 0;
};

/// Camera-to-pattern pose predicted from the chain T1 * G(A) * T2.
Pose predict_camera_pose(const Pose& T1, const Pose& T2, const ArmModel& model,
                         const JointAngles& angles);

/// Residuals of every sample against its prediction, stacked; 6 components
/// per sample (7 with scale_free). The solver minimizes 0.5 * ||r||^2.
Eigen::VectorXd residual_vector(const Pose& T1, const Pose& T2,
                                const std::vector<CalibSample>& samples,
                                const ArmModel& model, double rho,
                                bool scale_free = false);

/// Levenberg-Marquardt fit of (T1, T2) to the samples, multi-start with
/// seeded rotation perturbations. Throws ValidationError for fewer than 3
/// samples or gripper rotations that stay coaxial (unidentifiable).
ExtrinsicsPair solve_extrinsics(const std::vector<CalibSample>& samples,
                                const ArmModel& model, const SolveOptions& opts = {});

}  // namespace slamacc
