#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "slamacc/calib.hpp"
#include "slamacc/error.hpp"
#include "slamacc/kinematics.hpp"
#include "slamacc/rng.hpp"

using namespace slamacc;

namespace {

Pose true_t1() {
  return Pose(oracle::quat_from_axis_angle(Eigen::Vector3d(0.2, -0.1, 1.0), 0.35),
              Eigen::Vector3d(120, -60, -580), 1.0, "sawyer", "pattern");
}

Pose true_t2() {
  return Pose(oracle::quat_from_axis_angle(Eigen::Vector3d(1, 0.05, 0.02), 3.05),
              Eigen::Vector3d(22, -4, 55), 1.0, "camera", "gripper");
}

JointAngles diverse_angles(Rng& rng) {
  JointAngles a;
  for (int i = 0; i < 7; ++i) a(i) = rng.uniform(-0.6, 0.6);
  return a;
}

std::vector<CalibSample> exact_samples(const Pose& t1, const Pose& t2, const ArmModel& arm,
                                       int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<CalibSample> samples;
  for (int i = 0; i < n; ++i) {
    CalibSample s;
    s.angles = diverse_angles(rng);
    s.pose_calib = predict_camera_pose(t1, t2, arm, s.angles);
    s.t_ns = i * 1'000'000'000LL;
    samples.push_back(s);
  }
  return samples;
}

}  // namespace

TEST_CASE("predict_camera_pose chains the three maps") {
  ArmModel zero;
  CHECK(oracle::pose_distance(
            predict_camera_pose(Pose::identity(), Pose::identity(), zero, JointAngles::Zero()),
            Pose::identity()) < 1e-15);

  Pose t2(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 0, 80), 1.0);
  Pose p = predict_camera_pose(Pose::identity(), t2, zero, JointAngles::Zero());
  CHECK((p.t() - Eigen::Vector3d(0, 0, 80)).norm() < 1e-12);

  ArmModel arm = default_synthetic_arm();
  Rng rng(71);
  for (int i = 0; i < 200; ++i) {
    Pose t1 = oracle::random_pose(rng, 400.0, true);
    Pose t2r = oracle::random_pose(rng, 100.0, true);
    JointAngles a = diverse_angles(rng);
    Pose mine = predict_camera_pose(t1, t2r, arm, a);
    Eigen::Matrix4d ref = oracle::pose_matrix(t1) *
                          oracle::pose_matrix(forward_kinematics(arm, a)) *
                          oracle::pose_matrix(t2r);
    CHECK((mine.t() - ref.topRightCorner<3, 1>()).norm() < 1e-9);
    CHECK((mine.rotation() - ref.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("predict_camera_pose enforces the label chain") {
  ArmModel arm = default_synthetic_arm();
  Pose t1_bad = Pose::identity("pattern", "sawyer");  // reversed roles
  Pose t2 = Pose::identity("camera", "gripper");
  CHECK_THROWS_AS(predict_camera_pose(t1_bad, t2, arm, JointAngles::Zero()),
                  ValidationError);

  Pose labeled = predict_camera_pose(Pose::identity("sawyer", "pattern"), t2, arm,
                                     JointAngles::Zero());
  CHECK(labeled.source() == "camera");
  CHECK(labeled.target() == "pattern");
}

TEST_CASE("residual_vector vanishes on generating transforms") {
  ArmModel arm = default_synthetic_arm();
  auto samples = exact_samples(true_t1(), true_t2(), arm, 10, 72);
  Eigen::VectorXd r = residual_vector(true_t1(), true_t2(), samples, arm, 100.0);
  REQUIRE(r.size() == 60);
  CHECK(r.norm() < 1e-9);
  CHECK(0.5 * r.squaredNorm() < 1e-18);
}

TEST_CASE("residual_vector isolates a translation offset") {
  ArmModel arm = default_synthetic_arm();
  auto samples = exact_samples(true_t1(), true_t2(), arm, 1, 73);

  Pose shifted = compose(
      Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(1, 0, 0), 1.0), true_t1());
  Eigen::VectorXd r = residual_vector(shifted, true_t2(), samples, arm, 100.0);
  REQUIRE(r.size() == 6);
  CHECK(r(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.tail<5>().norm() < 1e-9);
}

TEST_CASE("residual shrinks along a perturbation path") {
  ArmModel arm = default_synthetic_arm();
  auto samples = exact_samples(true_t1(), true_t2(), arm, 10, 74);

  double prev = 1e300;
  for (double scale : {1.0, 0.5, 0.25, 0.1, 0.01}) {
    Twist xi;
    xi.omega = scale * Eigen::Vector3d(0.05, -0.02, 0.03);
    xi.v = scale * Eigen::Vector3d(3, -2, 1);
    double n = residual_vector(retract(true_t1(), xi), true_t2(), samples, arm, 100.0).norm();
    CHECK(n > 0.0);
    CHECK(n < prev);
    prev = n;
  }
}

TEST_CASE("solver recovers the generating transforms from clean data") {
  ArmModel arm = default_synthetic_arm();
  auto samples = exact_samples(true_t1(), true_t2(), arm, 30, 75);

  SolveOptions opts;
  opts.seed = 7;
  ExtrinsicsPair sol = solve_extrinsics(samples, arm, opts);

  CHECK(sol.converged);
  CHECK((sol.T1.t() - true_t1().t()).norm() < 1e-3);
  CHECK((sol.T2.t() - true_t2().t()).norm() < 1e-3);
  CHECK(sol.T1.q().angularDistance(true_t1().q()) < 1e-6);
  CHECK(sol.T2.q().angularDistance(true_t2().q()) < 1e-6);
  CHECK(sol.T1.s() == 1.0);
  CHECK(sol.T2.s() == 1.0);
  CHECK(sol.final_rms_mm < 1e-6);
  CHECK(sol.T1.source() == "sawyer");
  CHECK(sol.T1.target() == "pattern");
  CHECK(sol.T2.source() == "camera");
  CHECK(sol.T2.target() == "gripper");
}

TEST_CASE("identity is recovered when calibration equals the gripper pose") {
  ArmModel arm = default_synthetic_arm();
  Rng rng(76);
  std::vector<CalibSample> samples;
  for (int i = 0; i < 12; ++i) {
    CalibSample s;
    s.angles = diverse_angles(rng);
    Pose g = forward_kinematics(arm, s.angles);
    s.pose_calib = Pose(g.q(), g.t(), 1.0);  // unlabeled copy
    samples.push_back(s);
  }
  ExtrinsicsPair sol = solve_extrinsics(samples, arm);
  CHECK(oracle::pose_distance(sol.T1, Pose::identity()) < 1e-6);
  CHECK(oracle::pose_distance(sol.T2, Pose::identity()) < 1e-6);
  CHECK(sol.objective_trace.front() >= sol.objective_trace.back());
  CHECK(sol.objective_trace.back() < 1e-18);
}

TEST_CASE("accepted objectives decrease monotonically") {
  ArmModel arm = default_synthetic_arm();
  auto samples = exact_samples(true_t1(), true_t2(), arm, 15, 77);
  // Noise keeps the solve from terminating immediately.
  Rng rng(78);
  for (CalibSample& s : samples) {
    Pose p = s.pose_calib;
    s.pose_calib = Pose(p.q(), p.t() + rng.gauss3(0.5), 1.0, p.source(), p.target());
  }
  ExtrinsicsPair sol = solve_extrinsics(samples, arm);
  REQUIRE(sol.objective_trace.size() >= 2);
  for (size_t i = 1; i < sol.objective_trace.size(); ++i)
    CHECK(sol.objective_trace[i] < sol.objective_trace[i - 1]);
  CHECK(sol.iterations + 1 == static_cast<int>(sol.objective_trace.size()));
}

TEST_CASE("noisy solves stay in the expected error band") {
  ArmModel arm = default_synthetic_arm();
  SolveOptions opts;
  opts.restarts = 2;

  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };

  std::vector<double> rms_values, t1_errs, t2_errs;
  for (int trial = 0; trial < 20; ++trial) {
    auto samples = exact_samples(true_t1(), true_t2(), arm, 30, 80 + static_cast<uint64_t>(trial));
    Rng noise(900 + static_cast<uint64_t>(trial));
    for (CalibSample& s : samples) {
      Pose p = s.pose_calib;
      s.pose_calib = Pose(p.q(), p.t() + noise.gauss3(0.5), 1.0, p.source(), p.target());
    }
    opts.seed = static_cast<uint64_t>(trial);
    ExtrinsicsPair sol = solve_extrinsics(samples, arm, opts);
    rms_values.push_back(sol.final_rms_mm);
    t1_errs.push_back((sol.T1.t() - true_t1().t()).norm());
    t2_errs.push_back((sol.T2.t() - true_t2().t()).norm());
    CHECK(sol.converged);
  }
  CHECK(median_of(rms_values) >= 0.3);
  CHECK(median_of(rms_values) <= 0.8);
  CHECK(median_of(t1_errs) < 1.0);
  CHECK(median_of(t2_errs) < 1.0);
}

TEST_CASE("pattern-space redefinition is absorbed by T1") {
  ArmModel arm = default_synthetic_arm();
  auto samples = exact_samples(true_t1(), true_t2(), arm, 20, 81);

  Rng rng(82);
  Pose q_shift(oracle::quat_from_axis_angle(rng.unit_vector3(), 0.4),
               Eigen::Vector3d(30, -10, 25), 1.0, "pattern", "pattern");

  std::vector<CalibSample> moved = samples;
  for (CalibSample& s : moved) s.pose_calib = compose(q_shift, s.pose_calib);

  ExtrinsicsPair base = solve_extrinsics(samples, arm);
  ExtrinsicsPair shifted = solve_extrinsics(moved, arm);

  for (const CalibSample& s : samples) {
    Pose p = predict_camera_pose(base.T1, base.T2, arm, s.angles);
    Pose ps = predict_camera_pose(shifted.T1, shifted.T2, arm, s.angles);
    CHECK(oracle::pose_distance(ps, compose(q_shift, p)) < 1e-6);
  }
}

TEST_CASE("solver is deterministic for a fixed seed") {
  ArmModel arm = default_synthetic_arm();
  auto samples = exact_samples(true_t1(), true_t2(), arm, 12, 83);
  Rng noise(84);
  for (CalibSample& s : samples) {
    Pose p = s.pose_calib;
    s.pose_calib = Pose(p.q(), p.t() + noise.gauss3(0.4), 1.0, p.source(), p.target());
  }

  SolveOptions opts;
  opts.seed = 42;
  ExtrinsicsPair a = solve_extrinsics(samples, arm, opts);
  ExtrinsicsPair b = solve_extrinsics(samples, arm, opts);
  CHECK(a.T1.q().coeffs() == b.T1.q().coeffs());
  CHECK(a.T1.t() == b.T1.t());
  CHECK(a.T2.q().coeffs() == b.T2.q().coeffs());
  CHECK(a.T2.t() == b.T2.t());
  CHECK(a.objective_trace == b.objective_trace);
  CHECK(a.restart_index == b.restart_index);
}

TEST_CASE("solver rejects unusable sample sets") {
  ArmModel arm = default_synthetic_arm();
  auto two = exact_samples(true_t1(), true_t2(), arm, 2, 85);
  CHECK_THROWS_AS(solve_extrinsics(two, arm), ValidationError);

  // Only joint 1 moves: every gripper rotation shares one axis.
  std::vector<CalibSample> coaxial;
  for (int i = 0; i < 10; ++i) {
    CalibSample s;
    s.angles = JointAngles::Zero();
    s.angles(0) = 0.1 * i;
    s.pose_calib = predict_camera_pose(true_t1(), true_t2(), arm, s.angles);
    coaxial.push_back(s);
  }
  CHECK_THROWS_AS(solve_extrinsics(coaxial, arm), ValidationError);

  auto scaled = exact_samples(true_t1(), true_t2(), arm, 5, 86);
  Pose p = scaled[2].pose_calib;
  scaled[2].pose_calib = Pose(p.q(), p.t(), 2.0);
  CHECK_THROWS_AS(solve_extrinsics(scaled, arm), ValidationError);
}

TEST_CASE("scale-free solve still recovers rigid transforms from clean data") {
  ArmModel arm = default_synthetic_arm();
  auto samples = exact_samples(true_t1(), true_t2(), arm, 30, 87);
  SolveOptions opts;
  opts.scale_free = true;
  opts.restarts = 2;
  ExtrinsicsPair sol = solve_extrinsics(samples, arm, opts);
  CHECK(sol.T1.s() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.T2.s() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK((sol.T1.t() - true_t1().t()).norm() < 1e-2);
  CHECK((sol.T2.t() - true_t2().t()).norm() < 1e-2);
}
