// Acceptance gate: eight end-to-end checks over the shipped configs and the
// public pipeline, printed as one PASS/FAIL line each.

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sim_fixtures.hpp"
#include "slamacc/calib.hpp"
#include "slamacc/cli.hpp"
#include "slamacc/error.hpp"
#include "slamacc/eval.hpp"
#include "slamacc/io.hpp"
#include "slamacc/kinematics.hpp"
#include "slamacc/raycast.hpp"
#include "slamacc/rng.hpp"
#include "slamacc/simgen.hpp"

using namespace slamacc;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("slamacc_accept_" + std::to_string(getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Runs one CLI subcommand with its stdout chatter suppressed, so the gate
// prints exactly one line per criterion.
void run(const std::vector<std::string>& args) {
  std::fflush(stdout);
  int saved = dup(fileno(stdout));
  int sink = ::open("/dev/null", O_WRONLY);
  dup2(sink, fileno(stdout));
  ::close(sink);
  int rc = run_cli(args);
  std::fflush(stdout);
  dup2(saved, fileno(stdout));
  ::close(saved);
  if (rc != 0) throw Failure("command failed: " + args.front());
}

std::string zero_noise_config() {
  return std::string(SLAMACC_SOURCE_DIR) + "/configs/sim_zero_noise.json";
}

double rotation_error_rad(const Pose& a, const Pose& b) {
  Eigen::Quaterniond d = a.q() * b.q().conjugate();
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

Pose true_t1() {
  return Pose(oracle::quat_from_axis_angle(Eigen::Vector3d(0.2, -0.1, 1.0), 0.35),
              Eigen::Vector3d(120, -60, -580), 1.0, "sawyer", "pattern");
}

Pose true_t2() {
  return Pose(oracle::quat_from_axis_angle(Eigen::Vector3d(1, 0.05, 0.02), 3.05),
              Eigen::Vector3d(22, -4, 55), 1.0, "camera", "gripper");
}

std::vector<CalibSample> exact_samples(const Pose& t1, const Pose& t2, const ArmModel& arm,
                                       int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<CalibSample> samples;
  for (int i = 0; i < n; ++i) {
    CalibSample s;
    for (int k = 0; k < 7; ++k) s.angles(k) = rng.uniform(-0.6, 0.6);
    s.pose_calib = predict_camera_pose(t1, t2, arm, s.angles);
    s.t_ns = i * 1'000'000'000LL;
    samples.push_back(s);
  }
  return samples;
}

// Independent ray/triangle reference: plane intersection + barycentric test.
std::optional<double> plane_oracle(const Ray& r, const Eigen::Vector3d& v0,
                                   const Eigen::Vector3d& v1, const Eigen::Vector3d& v2,
                                   double eps = 1e-9) {
  Eigen::Vector3d e1 = v1 - v0, e2 = v2 - v0;
  Eigen::Vector3d n = e1.cross(e2);
  double denom = r.dir.dot(n);
  if (std::abs(denom) < eps) return std::nullopt;
  double t = (v0 - r.origin).dot(n) / denom;
  if (t < 0.0) return std::nullopt;
  Eigen::Vector3d h = r.origin + t * r.dir - v0;
  double d00 = e1.dot(e1), d01 = e1.dot(e2), d11 = e2.dot(e2);
  double dh1 = h.dot(e1), dh2 = h.dot(e2);
  double det = d00 * d11 - d01 * d01;
  double u = (d11 * dh1 - d01 * dh2) / det;
  double v = (d00 * dh2 - d01 * dh1) / det;
  if (u < 0.0 || v < 0.0 || u + v > 1.0) return std::nullopt;
  return t;
}

// Independent forward-kinematics reference: explicit 4x4 matrix chain.
Eigen::Matrix4d dh_matrix(const DhLink& l, double angle) {
  auto rot = [](const Eigen::Matrix3d& r) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = r;
    return m;
  };
  auto trans = [](double x, double y, double z) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topRightCorner<3, 1>() = Eigen::Vector3d(x, y, z);
    return m;
  };
  double theta = l.theta0_rad + angle;
  return rot(Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()).toRotationMatrix()) *
         trans(0, 0, l.d_mm) * trans(l.a_mm, 0, 0) *
         rot(Eigen::AngleAxisd(l.alpha_rad, Eigen::Vector3d::UnitX()).toRotationMatrix());
}

Eigen::Matrix4d fk_matrix(const ArmModel& m, const JointAngles& a) {
  Eigen::Matrix4d g = oracle::pose_matrix(m.base_offset);
  for (int i = 0; i < 7; ++i) g = g * dh_matrix(m.links[static_cast<size_t>(i)], a(i));
  return g * oracle::pose_matrix(m.tool_offset);
}

std::map<std::string, std::string> hash_tree(const fs::path& root) {
  std::map<std::string, std::string> hashes;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    hashes[fs::relative(entry.path(), root).string()] = sha256_file(entry.path().string());
  }
  return hashes;
}

// 1. Zero-noise dataset with an injected scale of 2: the full pipeline must
//    recover the scale to 1e-9 relative and keep every depth error under a
//    micron, in less than a minute.
std::string check_zero_noise_end_to_end() {
  auto start = std::chrono::steady_clock::now();
  TempDir tmp;
  std::string ds = (tmp.path / "ds").string();
  std::string ext = (tmp.path / "extrinsics.json").string();
  std::string ev = (tmp.path / "ev").string();
  run({"simulate", "--config", zero_noise_config(), "--out", ds});
  run({"calibrate", "--samples", ds + "/calib_samples.jsonl", "--arm", ds + "/arm.json",
       "--out", ext});
  run({"evaluate", "--manifest", ds + "/manifest.json", "--extrinsics", ext, "--mesh",
       ds + "/cube.obj", "--out", ev});

  std::vector<KeyframeStatsRow> rows = read_keyframe_stats_csv(ev + "/keyframe_stats.csv");
  expect(rows.size() == 20, "expected 20 keyframes, got " + std::to_string(rows.size()));
  double worst_lambda = 0.0, worst_mean = 0.0;
  for (const KeyframeStatsRow& row : rows) {
    worst_lambda = std::max(worst_lambda, std::abs(row.lambda / 2.0 - 1.0));
    worst_mean = std::max(worst_mean, std::abs(row.mean_err_mm));
  }
  expect(worst_lambda < 1e-9, "lambda off by " + num(worst_lambda) + " relative");
  expect(worst_mean < 1e-6, "keyframe mean error " + num(worst_mean) + " mm");

  double worst_err = 0.0;
  for (const PointRecord& r : read_point_csv(ev + "/points.csv"))
    worst_err = std::max(worst_err, std::abs(r.e_depth_mm));
  expect(worst_err < 1e-6, "point error " + num(worst_err) + " mm");

  double elapsed = seconds_since(start);
  expect(elapsed < 60.0, "took " + num(elapsed) + " s");
  return "max |e| " + num(worst_err) + " mm, lambda off " + num(worst_lambda) +
         " rel, " + num(elapsed) + " s";
}

// 2. Noise-free calibration recovers the rig to 1e-3 mm / 1e-6 rad; with
//    0.5 mm translation noise the median of 20 trials stays under 1 mm and
//    the median RMS residual lands in [0.3, 0.8] mm.
std::string check_calibration_recovery() {
  ArmModel arm = default_synthetic_arm();

  ExtrinsicsPair clean = solve_extrinsics(exact_samples(true_t1(), true_t2(), arm, 30, 2001), arm);
  double t1_err = (clean.T1.t() - true_t1().t()).norm();
  double t2_err = (clean.T2.t() - true_t2().t()).norm();
  double r1_err = rotation_error_rad(clean.T1, true_t1());
  double r2_err = rotation_error_rad(clean.T2, true_t2());
  expect(t1_err < 1e-3 && t2_err < 1e-3,
         "clean translation errors " + num(t1_err) + " / " + num(t2_err) + " mm");
  expect(r1_err < 1e-6 && r2_err < 1e-6,
         "clean rotation errors " + num(r1_err) + " / " + num(r2_err) + " rad");

  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  SolveOptions opts;
  opts.restarts = 2;
  std::vector<double> rms_values, t_errs;
  for (int trial = 0; trial < 20; ++trial) {
    auto samples = exact_samples(true_t1(), true_t2(), arm, 30, 80 + static_cast<uint64_t>(trial));
    Rng noise(900 + static_cast<uint64_t>(trial));
    for (CalibSample& s : samples) {
      Pose p = s.pose_calib;
      s.pose_calib = Pose(p.q(), p.t() + noise.gauss3(0.5), 1.0, p.source(), p.target());
    }
    opts.seed = static_cast<uint64_t>(trial);
    ExtrinsicsPair sol = solve_extrinsics(samples, arm, opts);
    expect(sol.converged, "trial " + std::to_string(trial) + " did not converge");
    rms_values.push_back(sol.final_rms_mm);
    t_errs.push_back((sol.T1.t() - true_t1().t()).norm());
    t_errs.push_back((sol.T2.t() - true_t2().t()).norm());
  }
  double med_rms = median_of(rms_values), med_t = median_of(t_errs);
  expect(med_rms >= 0.3 && med_rms <= 0.8, "median RMS " + num(med_rms) + " mm");
  expect(med_t < 1.0, "median translation error " + num(med_t) + " mm");
  return "clean " + num(std::max(t1_err, t2_err)) + " mm / " +
         num(std::max(r1_err, r2_err)) + " rad, noisy median " + num(med_t) +
         " mm, median RMS " + num(med_rms) + " mm";
}

// 3. The ray caster agrees with the plane+barycentric reference on 1e5
//    random ray/triangle pairs, within 1e-9 mm, in under 5 s.
std::string check_ray_triangle_oracle() {
  auto start = std::chrono::steady_clock::now();
  Rng rng(3001);
  size_t hits = 0;
  double worst = 0.0;
  for (int i = 0; i < 100'000; ++i) {
    Eigen::Vector3d v0 = oracle::random_point(rng, 100.0);
    Eigen::Vector3d v1 = v0 + oracle::random_point(rng, 80.0);
    Eigen::Vector3d v2 = v0 + oracle::random_point(rng, 80.0);
    Ray r{oracle::random_point(rng, 120.0), rng.unit_vector3()};
    if (i % 2 == 0) {
      // Aim every other ray at a point inside the triangle so hits are
      // exercised as thoroughly as misses.
      double u = rng.uniform01(), v = rng.uniform01();
      if (u + v > 1.0) {
        u = 1.0 - u;
        v = 1.0 - v;
      }
      Eigen::Vector3d target = v0 + u * (v1 - v0) + v * (v2 - v0);
      r.dir = (target - r.origin).normalized();
    }
    auto mine = ray_triangle_intersect(r, v0, v1, v2);
    auto ref = plane_oracle(r, v0, v1, v2);
    expect(mine.has_value() == ref.has_value(),
           "hit/miss disagreement at pair " + std::to_string(i));
    if (mine) {
      worst = std::max(worst, std::abs(mine->t - *ref));
      ++hits;
    }
  }
  expect(worst < 1e-9, "distance disagreement " + num(worst) + " mm");
  double elapsed = seconds_since(start);
  expect(elapsed < 5.0, "took " + num(elapsed) + " s");
  return std::to_string(hits) + " hits agree, worst dt " + num(worst) + " mm, " +
         num(elapsed) + " s";
}

// 4. Forward kinematics on the shipped arm table matches the explicit 4x4
//    matrix chain on 1000 random joint vectors.
std::string check_forward_kinematics_oracle() {
  ArmModel arm = read_arm_model(std::string(SLAMACC_SOURCE_DIR) + "/configs/arm_synthetic7.json");
  Rng rng(4001);
  double worst_t = 0.0, worst_q = 0.0;
  for (int i = 0; i < 1000; ++i) {
    JointAngles a;
    for (int k = 0; k < 7; ++k) a(k) = rng.uniform(-M_PI, M_PI);
    Pose fk = forward_kinematics(arm, a);
    Eigen::Matrix4d ref = fk_matrix(arm, a);
    worst_t = std::max(worst_t, (fk.t() - ref.topRightCorner<3, 1>()).norm());
    Eigen::Quaterniond qref(Eigen::Matrix3d(ref.topLeftCorner<3, 3>()));
    double dq = std::min((fk.q().coeffs() - qref.coeffs()).norm(),
                         (fk.q().coeffs() + qref.coeffs()).norm());
    worst_q = std::max(worst_q, dq);
  }
  expect(worst_t < 1e-9, "translation deviation " + num(worst_t) + " mm");
  expect(worst_q < 1e-12, "quaternion deviation " + num(worst_q));
  return "worst " + num(worst_t) + " mm / " + num(worst_q) + " quat over 1000 vectors";
}

// 5. With 1 mm depth noise the measured error statistics behave like folded
//    Gaussian noise: mean |e| near sigma*sqrt(2/pi), per-keyframe signed
//    means within 3 sigma / sqrt(Y) of zero.
std::string check_noise_statistics() {
  SimConfig cfg = fixtures::demo_config();
  cfg.noise.depth_sigma_mm = 1.0;
  cfg.seed = 5150;
  TempDir tmp;
  std::string ds = (tmp.path / "ds").string();
  std::string ext = (tmp.path / "extrinsics.json").string();
  std::string ev = (tmp.path / "ev").string();
  generate_dataset(cfg, ds);
  run({"calibrate", "--samples", ds + "/calib_samples.jsonl", "--arm", ds + "/arm.json",
       "--out", ext});
  run({"evaluate", "--manifest", ds + "/manifest.json", "--extrinsics", ext, "--mesh",
       ds + "/cube.obj", "--out", ev});

  std::vector<PointRecord> records = read_point_csv(ev + "/points.csv");
  expect(records.size() >= 10'000,
         "only " + std::to_string(records.size()) + " points");
  double sum_abs = 0.0;
  for (const PointRecord& r : records) sum_abs += std::abs(r.e_depth_mm);
  double mean_abs = sum_abs / static_cast<double>(records.size());
  const double folded = std::sqrt(2.0 / M_PI);
  expect(std::abs(mean_abs / folded - 1.0) < 0.1,
         "mean |e| " + num(mean_abs) + " mm vs " + num(folded));

  double worst_ratio = 0.0;
  for (const KeyframeStatsRow& row : read_keyframe_stats_csv(ev + "/keyframe_stats.csv")) {
    double bound = 3.0 / std::sqrt(static_cast<double>(row.n_points));
    worst_ratio = std::max(worst_ratio, std::abs(row.mean_err_mm) / bound);
  }
  expect(worst_ratio < 1.0, "keyframe mean at " + num(worst_ratio) + " of the 3-sigma bound");
  return std::to_string(records.size()) + " points, mean |e| " + num(mean_abs) +
         " mm, keyframe means at " + num(worst_ratio) + " of bound";
}

// 6. The error statistics reproduce their hand-computed values exactly.
std::string check_metric_hand_values() {
  KeyframeStats stats = keyframe_error_stats({1.0, 2.0, 3.0});
  expect(stats.mean_mm == 2.0 && stats.var_mm2 == 1.0,
         "stats of (1,2,3) gave mean " + num(stats.mean_mm) + ", var " + num(stats.var_mm2));
  expect(stats.min_mm == 1.0 && stats.max_mm == 3.0, "extrema of (1,2,3) wrong");

  PixelMap map = pixelwise_error_map({{7, 0, 2, 3, 1.0}, {8, 0, 2, 3, -1.0}}, 5, 4);
  expect(map.mean_abs.at(2, 3) == 1.0,
         "pixel (+1,-1) gave " + num(map.mean_abs.at(2, 3)));
  expect(map.counts[2 * 5 + 3] == 2, "pixel count wrong");

  DepthMap gt(1, 1), slam(1, 1);
  gt.at(0, 0) = 5.0;
  slam.at(0, 0) = 3.0;
  PointErrors pe = point_depth_errors(gt, slam);
  expect(pe.records.size() == 1 && pe.records[0].e_depth_mm == 2.0,
         "error of gt 5 vs slam 3 wrong");

  ScaleEstimate sc = estimate_scale({1.0, 2.0}, {2.0, 4.0});
  expect(sc.lambda == 2.0, "scale of (1,2)->(2,4) gave " + num(sc.lambda));
  return "mean 2, var 1, pixel 1, error +2, scale 2";
}

// 7. Rescaling every inverse depth by 0.1 or 10 leaves the measured depth
//    errors unchanged to 1e-12 mm, for every scale estimator.
std::string check_scale_invariance() {
  SimConfig cfg = fixtures::demo_config();
  cfg.noise.depth_sigma_mm = 1.0;
  cfg.seed = 7007;
  SynthesizedKeyframe base = synthesize_keyframe(cfg, cfg.waypoints[0], 0);

  double worst = 0.0;
  for (ScaleMethod method : {ScaleMethod::LeastSquares, ScaleMethod::MedianRatio,
                             ScaleMethod::VarianceWeighted}) {
    ScaleEstimate sc0 = estimate_keyframe_scale(base.kf, base.truth.depth_gt, method);
    PointErrors pe0 = point_depth_errors(base.truth.depth_gt,
                                         apply_scale(base.kf, sc0.lambda));
    for (double c : {0.1, 10.0}) {
      KeyFrame scaled = base.kf;
      for (double& d : scaled.idepth) d *= c;
      for (double& v : scaled.ivar) v *= c * c;
      ScaleEstimate sc = estimate_keyframe_scale(scaled, base.truth.depth_gt, method);
      PointErrors pe = point_depth_errors(base.truth.depth_gt,
                                          apply_scale(scaled, sc.lambda));
      expect(pe.records.size() == pe0.records.size(), "record count changed under rescaling");
      for (size_t i = 0; i < pe.records.size(); ++i) {
        expect(pe.records[i].p == pe0.records[i].p && pe.records[i].q == pe0.records[i].q,
               "record order changed under rescaling");
        worst = std::max(worst, std::abs(pe.records[i].e_depth_mm - pe0.records[i].e_depth_mm));
      }
    }
  }
  expect(worst < 1e-12, "error shifted by " + num(worst) + " mm");
  return "worst shift " + num(worst) + " mm across methods and factors";
}

// 8. The same seed reproduces the full output tree byte for byte, heatmaps
//    included.
std::string check_determinism() {
  std::string config = std::string(SLAMACC_SOURCE_DIR) + "/configs/sim_noisy.json";
  TempDir a, b;
  for (const TempDir* dir : {&a, &b}) {
    std::string ds = (dir->path / "ds").string();
    std::string ext = (dir->path / "extrinsics.json").string();
    std::string ev = (dir->path / "ev").string();
    std::string rep = (dir->path / "rep").string();
    run({"simulate", "--config", config, "--out", ds});
    run({"calibrate", "--samples", ds + "/calib_samples.jsonl", "--arm", ds + "/arm.json",
         "--out", ext});
    run({"evaluate", "--manifest", ds + "/manifest.json", "--extrinsics", ext, "--mesh",
         ds + "/cube.obj", "--out", ev});
    run({"report", "--eval", ev, "--out", rep});
  }
  auto ha = hash_tree(a.path), hb = hash_tree(b.path);
  expect(ha.size() > 100, "tree unexpectedly small");
  size_t ppm = 0;
  for (const auto& [path, hash] : ha) {
    auto it = hb.find(path);
    expect(it != hb.end(), "second run is missing " + path);
    expect(it->second == hash, path + " differs between runs");
    if (path.size() > 4 && path.substr(path.size() - 4) == ".ppm") ++ppm;
  }
  expect(ha.size() == hb.size(), "runs produced different file sets");
  expect(ppm >= 20, "expected heatmaps in the tree");
  return std::to_string(ha.size()) + " files identical, " + std::to_string(ppm) +
         " heatmaps included";
}

}  // namespace

int main() {
  struct Criterion {
    const char* label;
    std::string (*check)();
  };
  const Criterion criteria[] = {
      {"zero-noise end-to-end accuracy", check_zero_noise_end_to_end},
      {"calibration recovery", check_calibration_recovery},
      {"ray/triangle oracle agreement", check_ray_triangle_oracle},
      {"forward-kinematics oracle agreement", check_forward_kinematics_oracle},
      {"depth-noise statistics", check_noise_statistics},
      {"metric hand values", check_metric_hand_values},
      {"scale invariance of depth errors", check_scale_invariance},
      {"bytewise determinism", check_determinism},
  };

  int failed = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    try {
      std::string detail = c.check();
      std::printf("PASS [%d/8] %s: %s\n", index, c.label, detail.c_str());
    } catch (const std::exception& e) {
      std::printf("FAIL [%d/8] %s: %s\n", index, c.label, e.what());
      ++failed;
    }
    std::fflush(stdout);
  }
  if (failed) std::printf("%d of 8 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
