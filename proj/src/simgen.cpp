#include "slamacc/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>

#include "json_util.hpp"
#include "slamacc/calib.hpp"
#include "slamacc/error.hpp"
#include "slamacc/rng.hpp"

namespace fs = std::filesystem;

namespace slamacc {

using jsonio::json;

namespace {

// RNG stream ids; keyframe streams start above these.
constexpr uint64_t kCalibAngleStream = 2;
constexpr uint64_t kCalibNoiseStream = 3;
constexpr uint64_t kKeyframeStreamBase = 1000;

int64_t clock_stamp(int64_t index, double rate_hz) {
  return std::llround(static_cast<double>(index) * 1e9 / rate_hz);
}

int64_t clock_steps(double duration_s, double rate_hz) {
  return std::llround(duration_s * rate_hz);
}

JointAngles waypoint_angles(const SimConfig& cfg, int64_t t_ns) {
  size_t nseg = cfg.waypoints.size() - 1;
  double u = (static_cast<double>(t_ns) * 1e-9 / cfg.duration_s) * static_cast<double>(nseg);
  size_t k = std::min(static_cast<size_t>(std::max(0.0, std::floor(u))), nseg - 1);
  double f = std::clamp(u - static_cast<double>(k), 0.0, 1.0);
  return (1.0 - f) * cfg.waypoints[k] + f * cfg.waypoints[k + 1];
}

Pose random_rigid_perturbation(Rng& rng, double sigma_t_mm, double sigma_r_rad) {
  Eigen::Vector3d axis = rng.unit_vector3();
  double angle = rng.gauss(sigma_r_rad);
  Eigen::Vector3d dt = rng.gauss3(sigma_t_mm);
  Eigen::Quaterniond dq(Eigen::AngleAxisd(angle, axis));
  return Pose(dq, dt, 1.0);
}

// Pixels within band_px 8-connected steps of the silhouette of the hit
// region (its boundary against misses or the raster border), hit pixels only.
PixelMask silhouette_band(const DepthMap& gt, int band_px) {
  int W = gt.width, H = gt.height;
  PixelMask mask(static_cast<size_t>(W) * H, 0);
  std::vector<int> dist(static_cast<size_t>(W) * H, -1);
  auto hit = [&](int p, int q) { return !std::isnan(gt.at(p, q)); };

  std::deque<std::pair<int, int>> queue;
  for (int p = 0; p < H; ++p) {
    for (int q = 0; q < W; ++q) {
      if (!hit(p, q)) continue;
      bool border = p == 0 || q == 0 || p == H - 1 || q == W - 1;
      bool edge = border || !hit(p - 1, q) || !hit(p + 1, q) || !hit(p, q - 1) || !hit(p, q + 1);
      if (edge) {
        dist[static_cast<size_t>(p) * W + q] = 0;
        queue.emplace_back(p, q);
      }
    }
  }
  while (!queue.empty()) {
    auto [p, q] = queue.front();
    queue.pop_front();
    int d = dist[static_cast<size_t>(p) * W + q];
    if (d + 1 >= band_px) continue;
    for (int dp = -1; dp <= 1; ++dp) {
      for (int dq = -1; dq <= 1; ++dq) {
        int np = p + dp, nq = q + dq;
        if (np < 0 || nq < 0 || np >= H || nq >= W) continue;
        size_t i = static_cast<size_t>(np) * W + nq;
        if (dist[i] >= 0 || std::isnan(gt.values[i])) continue;
        dist[i] = d + 1;
        queue.emplace_back(np, nq);
      }
    }
  }
  for (size_t i = 0; i < mask.size(); ++i) mask[i] = dist[i] >= 0 ? 1 : 0;
  return mask;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

void SimConfig::validate() const {
  arm.validate();
  K.validate();
  require(t1_true.is_rigid(1e-12), "t1_true must be rigid (scale 1)");
  require(t2_true.is_rigid(1e-12), "t2_true must be rigid (scale 1)");
  require(cube.side_mm > 0, "cube side must be positive");
  require(cube.center_xy_mm.allFinite() && std::isfinite(cube.yaw_rad),
          "cube placement must be finite");
  require(waypoints.size() >= 2, "need at least 2 waypoints");
  for (const JointAngles& w : waypoints)
    require(w.allFinite(), "waypoints must be finite");
  require(std::isfinite(duration_s) && duration_s > 0, "duration must be positive");
  require(std::isfinite(joint_rate_hz) && joint_rate_hz > 0 && joint_rate_hz < 1e9,
          "joint rate must be positive");
  require(std::isfinite(frame_rate_hz) && frame_rate_hz > 0 && frame_rate_hz < 1e9,
          "frame rate must be positive");
  require(noise.depth_sigma_mm >= 0 && noise.pose_sigma_t_mm >= 0 &&
              noise.pose_sigma_r_rad >= 0 && noise.calib_sigma_t_mm >= 0,
          "noise sigmas must be nonnegative");
  require(std::isfinite(slam_scale) && slam_scale > 0, "slam scale must be positive");
  require(edge_band_px >= 1, "edge band must be at least 1 px");
  require(calib_sample_count >= 3, "need at least 3 calibration samples");
}

SimConfig read_sim_config(const std::string& path) {
  json j = jsonio::parse_document(path);
  jsonio::expect_keys(j,
                      {"arm_model", "t1_true", "t2_true", "cube", "intrinsics",
                       "waypoints_rad", "duration_s", "frame_rate_hz", "slam_scale", "seed"},
                      {"joint_rate_hz", "noise", "edge_band_px", "calib_sample_count"}, path,
                      0);

  SimConfig cfg;
  std::string arm_rel = jsonio::get_str(j, "arm_model", path, 0);
  cfg.arm = read_arm_model((fs::path(path).parent_path() / arm_rel).string());
  cfg.t1_true = pose_from_json(j.at("t1_true"), path, 0);
  cfg.t2_true = pose_from_json(j.at("t2_true"), path, 0);

  const json& cube = j.at("cube");
  jsonio::expect_keys(cube, {"side_mm", "center_xy_mm", "yaw_rad"}, path, 0);
  cfg.cube.side_mm = jsonio::get_finite(cube, "side_mm", path, 0);
  std::vector<double> c = jsonio::get_num_array(cube, "center_xy_mm", 2, path, 0);
  cfg.cube.center_xy_mm = Eigen::Vector2d(c[0], c[1]);
  cfg.cube.yaw_rad = jsonio::get_finite(cube, "yaw_rad", path, 0);

  cfg.K = intrinsics_from_json(j.at("intrinsics"), path, 0);

  const json& wps = j.at("waypoints_rad");
  if (!wps.is_array()) throw ParseError(path, 0, "\"waypoints_rad\" must be an array");
  for (size_t i = 0; i < wps.size(); ++i) {
    const json& w = wps[i];
    if (!w.is_array() || w.size() != 7)
      throw ParseError(path, 0, "each waypoint must be an array of 7 angles");
    JointAngles a;
    for (size_t k = 0; k < 7; ++k) {
      if (!w[k].is_number() || !std::isfinite(w[k].get<double>()))
        throw ParseError(path, 0, "waypoint angles must be finite numbers");
      a(static_cast<int>(k)) = w[k].get<double>();
    }
    cfg.waypoints.push_back(a);
  }

  cfg.duration_s = jsonio::get_finite(j, "duration_s", path, 0);
  if (j.contains("joint_rate_hz"))
    cfg.joint_rate_hz = jsonio::get_finite(j, "joint_rate_hz", path, 0);
  cfg.frame_rate_hz = jsonio::get_finite(j, "frame_rate_hz", path, 0);

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    jsonio::expect_keys(
        n, {}, {"depth_sigma_mm", "pose_sigma_t_mm", "pose_sigma_r_rad", "calib_sigma_t_mm"},
        path, 0);
    if (n.contains("depth_sigma_mm"))
      cfg.noise.depth_sigma_mm = jsonio::get_finite(n, "depth_sigma_mm", path, 0);
    if (n.contains("pose_sigma_t_mm"))
      cfg.noise.pose_sigma_t_mm = jsonio::get_finite(n, "pose_sigma_t_mm", path, 0);
    if (n.contains("pose_sigma_r_rad"))
      cfg.noise.pose_sigma_r_rad = jsonio::get_finite(n, "pose_sigma_r_rad", path, 0);
    if (n.contains("calib_sigma_t_mm"))
      cfg.noise.calib_sigma_t_mm = jsonio::get_finite(n, "calib_sigma_t_mm", path, 0);
  }

  cfg.slam_scale = jsonio::get_finite(j, "slam_scale", path, 0);
  if (j.contains("edge_band_px"))
    cfg.edge_band_px = static_cast<int>(jsonio::get_int(j, "edge_band_px", path, 0));
  if (j.contains("calib_sample_count"))
    cfg.calib_sample_count = static_cast<int>(jsonio::get_int(j, "calib_sample_count", path, 0));
  cfg.seed = jsonio::get_uint(j, "seed", path, 0);

  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return cfg;
}

nlohmann::json sim_config_to_json(const SimConfig& cfg) {
  json links = json::array();
  for (const DhLink& l : cfg.arm.links) {
    json link;
    link["a_mm"] = l.a_mm;
    link["alpha_rad"] = l.alpha_rad;
    link["d_mm"] = l.d_mm;
    link["theta0_rad"] = l.theta0_rad;
    links.push_back(link);
  }
  json arm;
  arm["links"] = links;
  arm["base_offset"] = pose_to_json(cfg.arm.base_offset);
  arm["tool_offset"] = pose_to_json(cfg.arm.tool_offset);

  json cube;
  cube["side_mm"] = cfg.cube.side_mm;
  cube["center_xy_mm"] = {cfg.cube.center_xy_mm.x(), cfg.cube.center_xy_mm.y()};
  cube["yaw_rad"] = cfg.cube.yaw_rad;

  json wps = json::array();
  for (const JointAngles& w : cfg.waypoints) {
    json a = json::array();
    for (int i = 0; i < 7; ++i) a.push_back(w(i));
    wps.push_back(a);
  }

  json noise;
  noise["depth_sigma_mm"] = cfg.noise.depth_sigma_mm;
  noise["pose_sigma_t_mm"] = cfg.noise.pose_sigma_t_mm;
  noise["pose_sigma_r_rad"] = cfg.noise.pose_sigma_r_rad;
  noise["calib_sigma_t_mm"] = cfg.noise.calib_sigma_t_mm;

  json j;
  j["arm_model"] = arm;
  j["t1_true"] = pose_to_json(cfg.t1_true);
  j["t2_true"] = pose_to_json(cfg.t2_true);
  j["cube"] = cube;
  j["intrinsics"] = intrinsics_to_json(cfg.K);
  j["waypoints_rad"] = wps;
  j["duration_s"] = cfg.duration_s;
  j["joint_rate_hz"] = cfg.joint_rate_hz;
  j["frame_rate_hz"] = cfg.frame_rate_hz;
  j["noise"] = noise;
  j["slam_scale"] = cfg.slam_scale;
  j["edge_band_px"] = cfg.edge_band_px;
  j["calib_sample_count"] = cfg.calib_sample_count;
  j["seed"] = cfg.seed;
  return j;
}

TriMesh scene_mesh(const SimConfig& cfg) {
  Eigen::Vector3d center(cfg.cube.center_xy_mm.x(), cfg.cube.center_xy_mm.y(),
                         cfg.cube.side_mm / 2.0);
  return make_cube(cfg.cube.side_mm, center, cfg.cube.yaw_rad);
}

std::pair<JointLog, FrameLog> generate_trajectory(const SimConfig& cfg) {
  cfg.validate();

  JointLog joints;
  int64_t nj = clock_steps(cfg.duration_s, cfg.joint_rate_hz);
  for (int64_t i = 0; i <= nj; ++i) {
    JointSample s;
    s.t_ns = clock_stamp(i, cfg.joint_rate_hz);
    s.angles = waypoint_angles(cfg, s.t_ns);
    joints.samples.push_back(s);
  }

  FrameLog frames;
  int64_t nf = clock_steps(cfg.duration_s, cfg.frame_rate_hz);
  for (int64_t i = 0; i <= nf; ++i) {
    FrameRecord r;
    r.t_ns = clock_stamp(i, cfg.frame_rate_hz);
    r.frame_id = i;
    frames.frames.push_back(r);
  }

  joints.validate();
  frames.validate();
  if (frames.frames.back().t_ns > joints.samples.back().t_ns)
    throw ValidationError("frame clock extends past the joint log; rates and duration conflict");
  return {std::move(joints), std::move(frames)};
}

SynthesizedKeyframe synthesize_keyframe(const SimConfig& cfg, const JointAngles& angles,
                                        int64_t kf_id, int revision) {
  cfg.validate();
  TriMesh mesh = scene_mesh(cfg);
  Pose true_pose = predict_camera_pose(cfg.t1_true, cfg.t2_true, cfg.arm, angles);
  Pose pose_gt(true_pose.q(), true_pose.t(), 1.0, "camera", "pattern");

  DepthMap gt = ground_truth_depth_map(pose_gt, cfg.K, mesh);
  PixelMask mask = silhouette_band(gt, cfg.edge_band_px);

  Rng rng(cfg.seed, kKeyframeStreamBase + static_cast<uint64_t>(kf_id) * 16 +
                        static_cast<uint64_t>(revision));

  // Pose noise is drawn first so the pixel stream stays aligned across
  // masks of different sizes.
  Pose perturb = random_rigid_perturbation(rng, cfg.noise.pose_sigma_t_mm,
                                           cfg.noise.pose_sigma_r_rad);
  Pose to_slam(Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero(), 1.0 / cfg.slam_scale,
               "", "slam");
  Pose pose_est = compose(to_slam, compose(perturb, pose_gt));

  SynthesizedKeyframe out;
  out.kf.kf_id = kf_id;
  out.kf.revision = revision;
  out.kf.pose_est = pose_est;
  out.kf.K = cfg.K;
  size_t n = gt.values.size();
  out.kf.idepth.assign(n, 0.0);
  out.kf.ivar.assign(n, 0.0);

  out.masked_pixels = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    double depth = gt.values[i] + rng.gauss(cfg.noise.depth_sigma_mm);
    if (!(depth > 0.0)) continue;
    double idepth = cfg.slam_scale / depth;
    out.kf.idepth[i] = idepth;
    out.kf.ivar[i] = cfg.noise.depth_sigma_mm * cfg.noise.depth_sigma_mm * idepth * idepth *
                     idepth * idepth;
    ++out.masked_pixels;
  }
  if (out.masked_pixels == 0)
    std::fprintf(stderr, "warning: keyframe %lld sees no cube pixels\n",
                 static_cast<long long>(kf_id));

  out.truth.kf_id = kf_id;
  out.truth.revision = revision;
  out.truth.pose_true = pose_gt;
  out.truth.depth_gt = std::move(gt);
  return out;
}

Manifest generate_dataset(const SimConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

  auto [joints, frames] = generate_trajectory(cfg);

  // Calibration samples: independent random joint vectors, so the gripper
  // rotations are diverse no matter how gentle the filming path is.
  Rng angle_rng(cfg.seed, kCalibAngleStream);
  Rng calib_noise(cfg.seed, kCalibNoiseStream);
  std::vector<CalibSample> calib;
  for (int i = 0; i < cfg.calib_sample_count; ++i) {
    CalibSample s;
    s.t_ns = static_cast<int64_t>(i) * 1'000'000'000;
    for (int k = 0; k < 7; ++k) s.angles(k) = angle_rng.uniform(-0.5, 0.5);
    Pose p = predict_camera_pose(cfg.t1_true, cfg.t2_true, cfg.arm, s.angles);
    Eigen::Vector3d dt = calib_noise.gauss3(cfg.noise.calib_sigma_t_mm);
    s.pose_calib = Pose(p.q(), p.t() + dt, 1.0, "camera", "pattern");
    calib.push_back(s);
  }

  std::vector<KeyFrame> kfs;
  std::vector<TruthRecord> truth;
  for (const FrameRecord& f : frames.frames) {
    JointAngles a = interpolate_joints(joints, f.t_ns);
    SynthesizedKeyframe s = synthesize_keyframe(cfg, a, f.frame_id, 0);
    s.kf.t_ns = f.t_ns;
    kfs.push_back(std::move(s.kf));
    truth.push_back(std::move(s.truth));
  }

  fs::path dir(out_dir);
  write_joint_log((dir / "joints.jsonl").string(), joints);
  write_frame_log((dir / "frames.jsonl").string(), frames);
  write_calib_samples((dir / "calib_samples.jsonl").string(), calib);
  write_mesh((dir / "cube.obj").string(), scene_mesh(cfg));
  write_intrinsics((dir / "intrinsics.json").string(), cfg.K);
  write_arm_model((dir / "arm.json").string(), cfg.arm);
  std::vector<std::string> kf_files = write_keyframes(out_dir, kfs);
  std::vector<std::string> truth_files = write_truth(out_dir, truth);

  Manifest m;
  m.seed = cfg.seed;
  m.config_echo = sim_config_to_json(cfg);
  auto add = [&](const std::string& rel, const std::string& role) {
    m.files.push_back({rel, sha256_file((dir / rel).string()), role});
  };
  add("joints.jsonl", "jointlog");
  add("frames.jsonl", "framelog");
  add("calib_samples.jsonl", "calib_samples");
  add("cube.obj", "mesh");
  add("intrinsics.json", "intrinsics");
  add("arm.json", "arm");
  add(kf_files.front(), "keyframes");
  for (size_t i = 1; i < kf_files.size(); ++i) add(kf_files[i], "raster");
  add(truth_files.front(), "truth");
  for (size_t i = 1; i < truth_files.size(); ++i) add(truth_files[i], "raster");

  write_manifest((dir / "manifest.json").string(), m);
  return m;
}

}  // namespace slamacc
