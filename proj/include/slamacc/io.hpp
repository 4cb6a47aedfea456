#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "slamacc/calib.hpp"
#include "slamacc/eval.hpp"
#include "slamacc/kinematics.hpp"
#include "slamacc/raycast.hpp"
#include "slamacc/sync.hpp"

namespace slamacc {

// ---- Pose JSON ({"q_wxyz","t_mm","s","source","target"}) ----

nlohmann::json pose_to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j, const std::string& path, long line);

// ---- JSON-Lines logs ----

JointLog read_joint_log(const std::string& path);
void write_joint_log(const std::string& path, const JointLog& log);

FrameLog read_frame_log(const std::string& path);
void write_frame_log(const std::string& path, const FrameLog& log);

std::vector<CalibSample> read_calib_samples(const std::string& path);
void write_calib_samples(const std::string& path, const std::vector<CalibSample>& samples);

std::vector<SyncedPacket> read_sync_packets(const std::string& path);
void write_sync_packets(const std::string& path, const std::vector<SyncedPacket>& packets);
void write_sync_drops(const std::string& path, const std::vector<DroppedFrame>& drops);

// ---- Whole-file JSON documents ----

ArmModel read_arm_model(const std::string& path);
void write_arm_model(const std::string& path, const ArmModel& model);

Intrinsics read_intrinsics(const std::string& path);
void write_intrinsics(const std::string& path, const Intrinsics& K);
Intrinsics intrinsics_from_json(const nlohmann::json& j, const std::string& path, long line);
nlohmann::json intrinsics_to_json(const Intrinsics& K);

ExtrinsicsPair read_extrinsics_report(const std::string& path);
void write_extrinsics_report(const std::string& path, const ExtrinsicsPair& pair);

// ---- Mesh (OBJ subset: "v x y z" and "f i j k" lines only) ----

TriMesh read_mesh(const std::string& path);
void write_mesh(const std::string& path, const TriMesh& mesh);

// ---- Binary rasters (little-endian, row-major, JSON sidecar at path+".json") ----

// Depth map as 32-bit floats; sidecar {"width","height","units":"mm"}.
DepthMap read_depth_map_f32(const std::string& path);
void write_depth_map_f32(const std::string& path, const DepthMap& map);

// Raw double raster; sidecar {"width","height","dtype":"f64"}.
std::vector<double> read_raster_f64(const std::string& path, int& width, int& height);
void write_raster_f64(const std::string& path, const std::vector<double>& values,
                      int width, int height);

// Unsigned 32-bit counts; sidecar {"width","height","dtype":"u32"}.
std::vector<uint32_t> read_counts_u32(const std::string& path, int& width, int& height);
void write_counts_u32(const std::string& path, const std::vector<uint32_t>& counts,
                      int width, int height);

// ---- Keyframe store (JSONL index plus per-keyframe rasters) ----

// Writes keyframes.jsonl and rasters/ under dir; returns the relative paths
// of every file written (index first).
std::vector<std::string> write_keyframes(const std::string& dir,
                                         const std::vector<KeyFrame>& kfs);
// Reads an index written by write_keyframes; raster paths resolve relative
// to the index file's directory. K is shared by all keyframes.
std::vector<KeyFrame> read_keyframes(const std::string& index_path, const Intrinsics& K);

// Ground-truth sidecar: the unperturbed camera pose and depth raster the
// generator built each keyframe from.
struct TruthRecord {
  int64_t kf_id = 0;
  int revision = 0;
  Pose pose_true;  // camera to pattern, rigid
  DepthMap depth_gt;
};

std::vector<std::string> write_truth(const std::string& dir,
                                     const std::vector<TruthRecord>& records);
std::vector<TruthRecord> read_truth(const std::string& index_path);

// ---- CSV reports ----

struct KeyframeStatsRow {
  int64_t kf_id = 0;
  int revision = 0;
  int64_t t_ns = 0;
  double lambda = 0.0;
  int64_t n_points = 0;
  double mean_err_mm = 0.0;
  double var_err_mm2 = 0.0;
  double min_err_mm = 0.0;
  double max_err_mm = 0.0;
};

void write_keyframe_stats_csv(const std::string& path,
                              const std::vector<KeyframeStatsRow>& rows);
std::vector<KeyframeStatsRow> read_keyframe_stats_csv(const std::string& path);

void write_point_csv(const std::string& path, const std::vector<PointRecord>& records);
std::vector<PointRecord> read_point_csv(const std::string& path);

// ---- Heatmap rendering ----

struct HeatmapStyle {
  double min_mm = 0.0;  // clamp range; must satisfy min < max
  double max_mm = 5.0;
  std::array<uint8_t, 3> invalid{128, 128, 128};
  std::array<uint8_t, 3> lo{0, 255, 0};  // color at min
  std::array<uint8_t, 3> hi{255, 0, 0};  // color at max
};

// Binary PPM (P6, maxval 255); values clamp to [min,max] and interpolate
// channel-linearly from lo to hi; invalid pixels take the invalid color.
void write_heatmap(const DepthMap& map, const HeatmapStyle& style, const std::string& path);

// ---- Dataset manifest ----

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::string sha256;
  std::string role;  // jointlog, framelog, keyframes, mesh, intrinsics,
                     // calib_samples, arm, truth, raster
};

struct Manifest {
  std::vector<ManifestEntry> files;
  uint64_t seed = 0;
  nlohmann::json config_echo;
};

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

void write_manifest(const std::string& path, const Manifest& manifest);
// verify: every listed file must exist next to the manifest and match its hash.
Manifest read_manifest(const std::string& path, bool verify = true);

}  // namespace slamacc
