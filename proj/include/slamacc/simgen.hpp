#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "slamacc/eval.hpp"
#include "slamacc/io.hpp"
#include "slamacc/kinematics.hpp"
#include "slamacc/raycast.hpp"
#include "slamacc/sync.hpp"

namespace slamacc {

struct CubeSpec {
  double side_mm = 100.0;
  Eigen::Vector2d center_xy_mm{0.0, 0.0};  // on the pattern grid
  double yaw_rad = 0.0;
};

struct NoiseSpec {
  double depth_sigma_mm = 0.0;    // additive on metric depth
  double pose_sigma_t_mm = 0.0;   // keyframe pose translation
  double pose_sigma_r_rad = 0.0;  // keyframe pose rotation angle
  double calib_sigma_t_mm = 0.0;  // calibration pose translation
};

// Everything the synthetic-data generator needs. The true transforms play
// the role the calibration solver later has to recover.
struct SimConfig {
  ArmModel arm;
  Pose t1_true;  // robot base to pattern
  Pose t2_true;  // camera to gripper
  CubeSpec cube;
  Intrinsics K;
  std::vector<JointAngles> waypoints;
  double duration_s = 2.0;
  double joint_rate_hz = 100.0;
  double frame_rate_hz = 10.0;
  NoiseSpec noise;
  double slam_scale = 1.0;  // injected scale: stored idepth = slam_scale / depth
  int edge_band_px = 6;     // silhouette band width retained as "semi-dense"
  int calib_sample_count = 30;
  uint64_t seed = 0;

  void validate() const;
};

// Reads a config document; the "arm_model" path resolves relative to the
// config file's directory.
SimConfig read_sim_config(const std::string& path);

// Normalized echo of a config (arm model inlined); what the manifest embeds.
nlohmann::json sim_config_to_json(const SimConfig& cfg);

// The control cube resting on the pattern plane (min z = 0).
TriMesh scene_mesh(const SimConfig& cfg);

// Joint log sampled at the joint rate and frame stamps at the frame rate,
// both over [0, duration]; angles interpolate linearly between waypoints.
std::pair<JointLog, FrameLog> generate_trajectory(const SimConfig& cfg);

struct SynthesizedKeyframe {
  KeyFrame kf;
  TruthRecord truth;     // unperturbed pose and full ground-truth raster
  size_t masked_pixels;  // 0 means the camera saw no cube (warned)
};

// Builds one keyframe at the given joint vector: ground-truth depths by
// raycasting, a silhouette-band mask, noise and the injected scale on the
// inverse depths, and a perturbed pose estimate.
SynthesizedKeyframe synthesize_keyframe(const SimConfig& cfg, const JointAngles& angles,
                                        int64_t kf_id, int revision = 0);

// Writes the complete dataset (logs, calibration samples, keyframes, truth,
// mesh, intrinsics, arm model, manifest) under out_dir and returns the
// manifest. Byte-identical for identical configs.
Manifest generate_dataset(const SimConfig& cfg, const std::string& out_dir);

}  // namespace slamacc
