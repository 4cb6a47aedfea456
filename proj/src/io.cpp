#include "slamacc/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "slamacc/error.hpp"

namespace fs = std::filesystem;

namespace slamacc {

using jsonio::format_double;
using jsonio::json;

namespace {

// Splits JSONL content into lines, stripping one trailing \r each; rejects
// blank lines so silent truncation cannot pass as valid data.
void for_each_line(const std::string& path,
                   const std::function<void(const std::string&, long)>& fn) {
  std::string text = jsonio::read_text_file(path);
  size_t start = 0;
  long lineno = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lineno;
    if (line.empty()) throw ParseError(path, lineno, "blank line");
    fn(line, lineno);
    start = end + 1;
  }
}

void write_lines(const std::string& path, const std::vector<json>& lines) {
  std::string out;
  for (const json& j : lines) {
    out += j.dump();
    out += '\n';
  }
  jsonio::write_text_file(path, out);
}

[[noreturn]] void rethrow_with_path(const std::string& path, const ValidationError& e) {
  throw ValidationError(path + ": " + e.what());
}

JointAngles angles_from_json(const json& j, const std::string& path, long line) {
  std::vector<double> a = jsonio::get_num_array(j, "angles_rad", 7, path, line);
  JointAngles out;
  for (int i = 0; i < 7; ++i) out(i) = a[static_cast<size_t>(i)];
  return out;
}

json angles_to_json(const JointAngles& a) {
  json arr = json::array();
  for (int i = 0; i < 7; ++i) arr.push_back(a(i));
  return arr;
}

std::string read_bytes(const std::string& path) { return jsonio::read_text_file(path); }

void write_bytes(const std::string& path, const std::string& bytes) {
  jsonio::write_text_file(path, bytes);
}

void put_u32(std::string& out, uint32_t x) {
  out.push_back(static_cast<char>(x & 0xff));
  out.push_back(static_cast<char>((x >> 8) & 0xff));
  out.push_back(static_cast<char>((x >> 16) & 0xff));
  out.push_back(static_cast<char>((x >> 24) & 0xff));
}

void put_u64(std::string& out, uint64_t x) {
  put_u32(out, static_cast<uint32_t>(x & 0xffffffffu));
  put_u32(out, static_cast<uint32_t>(x >> 32));
}

uint32_t take_u32(const unsigned char* b) {
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t take_u64(const unsigned char* b) {
  return static_cast<uint64_t>(take_u32(b)) | (static_cast<uint64_t>(take_u32(b + 4)) << 32);
}

struct RasterDims {
  int width = 0, height = 0;
};

void write_sidecar(const std::string& raster_path, int width, int height,
                   const char* tag_key, const char* tag_value) {
  json j;
  j["width"] = width;
  j["height"] = height;
  j[tag_key] = tag_value;
  jsonio::write_text_file(raster_path + ".json", j.dump(2) + "\n");
}

RasterDims read_sidecar(const std::string& raster_path, const char* tag_key,
                        const char* tag_value) {
  std::string side = raster_path + ".json";
  json j = jsonio::parse_document(side);
  jsonio::expect_keys(j, {"width", "height", tag_key}, side, 0);
  RasterDims d;
  d.width = static_cast<int>(jsonio::get_int(j, "width", side, 0));
  d.height = static_cast<int>(jsonio::get_int(j, "height", side, 0));
  if (d.width <= 0 || d.height <= 0)
    throw ValidationError(side + ": raster dimensions must be positive");
  if (jsonio::get_str(j, tag_key, side, 0) != tag_value)
    throw ValidationError(side + ": expected " + std::string(tag_key) + " \"" + tag_value +
                          "\"");
  return d;
}

void check_payload_size(const std::string& path, size_t actual, size_t expected) {
  if (actual != expected)
    throw ValidationError(path + ": raster holds " + std::to_string(actual) +
                          " bytes, sidecar implies " + std::to_string(expected));
}

std::string csv_int(int64_t x) { return std::to_string(x); }

// Parses a full token or throws; from_chars rejects partial consumption.
template <typename T>
T csv_number(const std::string& field, const std::string& path, long line) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError(path, line, "bad numeric field \"" + field + "\"");
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void check_depth_positive(const DepthMap& map, const std::string& path) {
  for (double v : map.values)
    if (!std::isnan(v) && v <= 0.0)
      throw ValidationError(path + ": depth map holds nonpositive valid entries");
}

std::string kf_basename(int64_t kf_id, int revision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "kf_%06lld_r%02d", static_cast<long long>(kf_id), revision);
  return buf;
}

const std::vector<std::string>& known_roles() {
  static const std::vector<std::string> roles = {
      "jointlog", "framelog", "keyframes",     "mesh", "intrinsics",
      "calib_samples", "arm",  "truth", "raster"};
  return roles;
}

}  // namespace

// ---- Pose JSON ----

json pose_to_json(const Pose& p) {
  json j;
  j["q_wxyz"] = {p.q().w(), p.q().x(), p.q().y(), p.q().z()};
  j["t_mm"] = {p.t().x(), p.t().y(), p.t().z()};
  j["s"] = p.s();
  j["source"] = p.source();
  j["target"] = p.target();
  return j;
}

Pose pose_from_json(const json& j, const std::string& path, long line) {
  jsonio::expect_keys(j, {"q_wxyz", "t_mm", "s", "source", "target"}, path, line);
  std::vector<double> q = jsonio::get_num_array(j, "q_wxyz", 4, path, line);
  std::vector<double> t = jsonio::get_num_array(j, "t_mm", 3, path, line);
  double s = jsonio::get_finite(j, "s", path, line);
  std::string source = jsonio::get_str(j, "source", path, line);
  std::string target = jsonio::get_str(j, "target", path, line);
  try {
    return Pose(Eigen::Quaterniond(q[0], q[1], q[2], q[3]), Eigen::Vector3d(t[0], t[1], t[2]),
                s, source, target);
  } catch (const ValidationError& e) {
    throw ParseError(path, line, e.what());
  }
}

// ---- JSON-Lines logs ----

JointLog read_joint_log(const std::string& path) {
  JointLog log;
  for_each_line(path, [&](const std::string& text, long line) {
    json j = jsonio::parse_line(text, path, line);
    jsonio::expect_keys(j, {"t_ns", "angles_rad"}, path, line);
    JointSample s;
    s.t_ns = jsonio::get_int(j, "t_ns", path, line);
    s.angles = angles_from_json(j, path, line);
    log.samples.push_back(s);
  });
  try {
    log.validate();
  } catch (const ValidationError& e) {
    rethrow_with_path(path, e);
  }
  return log;
}

void write_joint_log(const std::string& path, const JointLog& log) {
  std::vector<json> lines;
  lines.reserve(log.samples.size());
  for (const JointSample& s : log.samples) {
    json j;
    j["t_ns"] = s.t_ns;
    j["angles_rad"] = angles_to_json(s.angles);
    lines.push_back(j);
  }
  write_lines(path, lines);
}

FrameLog read_frame_log(const std::string& path) {
  FrameLog log;
  for_each_line(path, [&](const std::string& text, long line) {
    json j = jsonio::parse_line(text, path, line);
    jsonio::expect_keys(j, {"t_ns", "frame_id"}, path, line);
    FrameRecord r;
    r.t_ns = jsonio::get_int(j, "t_ns", path, line);
    r.frame_id = jsonio::get_int(j, "frame_id", path, line);
    log.frames.push_back(r);
  });
  try {
    log.validate();
  } catch (const ValidationError& e) {
    rethrow_with_path(path, e);
  }
  return log;
}

void write_frame_log(const std::string& path, const FrameLog& log) {
  std::vector<json> lines;
  lines.reserve(log.frames.size());
  for (const FrameRecord& r : log.frames) {
    json j;
    j["t_ns"] = r.t_ns;
    j["frame_id"] = r.frame_id;
    lines.push_back(j);
  }
  write_lines(path, lines);
}

std::vector<CalibSample> read_calib_samples(const std::string& path) {
  std::vector<CalibSample> samples;
  for_each_line(path, [&](const std::string& text, long line) {
    json j = jsonio::parse_line(text, path, line);
    jsonio::expect_keys(j, {"t_ns", "angles_rad", "pose_calib"}, path, line);
    CalibSample s;
    s.t_ns = jsonio::get_int(j, "t_ns", path, line);
    s.angles = angles_from_json(j, path, line);
    s.pose_calib = pose_from_json(j.at("pose_calib"), path, line);
    samples.push_back(s);
  });
  return samples;
}

void write_calib_samples(const std::string& path, const std::vector<CalibSample>& samples) {
  std::vector<json> lines;
  lines.reserve(samples.size());
  for (const CalibSample& s : samples) {
    json j;
    j["t_ns"] = s.t_ns;
    j["angles_rad"] = angles_to_json(s.angles);
    j["pose_calib"] = pose_to_json(s.pose_calib);
    lines.push_back(j);
  }
  write_lines(path, lines);
}

std::vector<SyncedPacket> read_sync_packets(const std::string& path) {
  std::vector<SyncedPacket> packets;
  for_each_line(path, [&](const std::string& text, long line) {
    json j = jsonio::parse_line(text, path, line);
    jsonio::expect_keys(j, {"frame_id", "t_ns", "angles_rad", "gap_ns"}, path, line);
    SyncedPacket p;
    p.frame_id = jsonio::get_int(j, "frame_id", path, line);
    p.t_ns = jsonio::get_int(j, "t_ns", path, line);
    p.angles = angles_from_json(j, path, line);
    p.gap_ns = jsonio::get_int(j, "gap_ns", path, line);
    packets.push_back(p);
  });
  return packets;
}

void write_sync_packets(const std::string& path, const std::vector<SyncedPacket>& packets) {
  std::vector<json> lines;
  lines.reserve(packets.size());
  for (const SyncedPacket& p : packets) {
    json j;
    j["frame_id"] = p.frame_id;
    j["t_ns"] = p.t_ns;
    j["angles_rad"] = angles_to_json(p.angles);
    j["gap_ns"] = p.gap_ns;
    lines.push_back(j);
  }
  write_lines(path, lines);
}

void write_sync_drops(const std::string& path, const std::vector<DroppedFrame>& drops) {
  std::vector<json> lines;
  lines.reserve(drops.size());
  for (const DroppedFrame& d : drops) {
    json j;
    j["frame_id"] = d.frame_id;
    j["t_ns"] = d.t_ns;
    j["reason"] = d.reason;
    lines.push_back(j);
  }
  write_lines(path, lines);
}

// ---- Whole-file JSON documents ----

ArmModel read_arm_model(const std::string& path) {
  json j = jsonio::parse_document(path);
  jsonio::expect_keys(j, {"links", "base_offset", "tool_offset"}, path, 0);
  const json& links = j.at("links");
  if (!links.is_array() || links.size() != 7)
    throw ParseError(path, 0, "\"links\" must be an array of 7 objects");
  ArmModel model;
  for (size_t i = 0; i < 7; ++i) {
    const json& l = links[i];
    jsonio::expect_keys(l, {"a_mm", "alpha_rad", "d_mm", "theta0_rad"}, path, 0);
    model.links[i].a_mm = jsonio::get_finite(l, "a_mm", path, 0);
    model.links[i].alpha_rad = jsonio::get_finite(l, "alpha_rad", path, 0);
    model.links[i].d_mm = jsonio::get_finite(l, "d_mm", path, 0);
    model.links[i].theta0_rad = jsonio::get_finite(l, "theta0_rad", path, 0);
  }
  model.base_offset = pose_from_json(j.at("base_offset"), path, 0);
  model.tool_offset = pose_from_json(j.at("tool_offset"), path, 0);
  try {
    model.validate();
  } catch (const ValidationError& e) {
    rethrow_with_path(path, e);
  }
  return model;
}

void write_arm_model(const std::string& path, const ArmModel& model) {
  json links = json::array();
  for (const DhLink& l : model.links) {
    json link;
    link["a_mm"] = l.a_mm;
    link["alpha_rad"] = l.alpha_rad;
    link["d_mm"] = l.d_mm;
    link["theta0_rad"] = l.theta0_rad;
    links.push_back(link);
  }
  json j;
  j["links"] = links;
  j["base_offset"] = pose_to_json(model.base_offset);
  j["tool_offset"] = pose_to_json(model.tool_offset);
  jsonio::write_text_file(path, j.dump(2) + "\n");
}

Intrinsics intrinsics_from_json(const json& j, const std::string& path, long line) {
  if (!j.is_object() || !j.contains("model"))
    throw ParseError(path, line, "missing key \"model\"");
  std::string model = jsonio::get_str(j, "model", path, line);
  Intrinsics K;
  if (model == "pinhole") {
    jsonio::expect_keys(j, {"model", "fx", "fy", "cx", "cy", "width", "height"}, path, line);
    K.model = CameraModel::Pinhole;
  } else if (model == "fov") {
    jsonio::expect_keys(j, {"model", "fx", "fy", "cx", "cy", "w", "width", "height"}, path,
                        line);
    K.model = CameraModel::Fov;
    K.w = jsonio::get_finite(j, "w", path, line);
  } else {
    throw ParseError(path, line, "\"model\" must be \"pinhole\" or \"fov\"");
  }
  K.fx = jsonio::get_finite(j, "fx", path, line);
  K.fy = jsonio::get_finite(j, "fy", path, line);
  K.cx = jsonio::get_finite(j, "cx", path, line);
  K.cy = jsonio::get_finite(j, "cy", path, line);
  K.width = static_cast<int>(jsonio::get_int(j, "width", path, line));
  K.height = static_cast<int>(jsonio::get_int(j, "height", path, line));
  try {
    K.validate();
  } catch (const ValidationError& e) {
    rethrow_with_path(path, e);
  }
  return K;
}

json intrinsics_to_json(const Intrinsics& K) {
  json j;
  j["model"] = K.model == CameraModel::Pinhole ? "pinhole" : "fov";
  j["fx"] = K.fx;
  j["fy"] = K.fy;
  j["cx"] = K.cx;
  j["cy"] = K.cy;
  if (K.model == CameraModel::Fov) j["w"] = K.w;
  j["width"] = K.width;
  j["height"] = K.height;
  return j;
}

Intrinsics read_intrinsics(const std::string& path) {
  return intrinsics_from_json(jsonio::parse_document(path), path, 0);
}

void write_intrinsics(const std::string& path, const Intrinsics& K) {
  jsonio::write_text_file(path, intrinsics_to_json(K).dump(2) + "\n");
}

ExtrinsicsPair read_extrinsics_report(const std::string& path) {
  json j = jsonio::parse_document(path);
  jsonio::expect_keys(j, {"T1", "T2", "rms_mm", "iterations", "converged", "restart_index"},
                      path, 0);
  ExtrinsicsPair pair;
  pair.T1 = pose_from_json(j.at("T1"), path, 0);
  pair.T2 = pose_from_json(j.at("T2"), path, 0);
  pair.final_rms_mm = jsonio::get_finite(j, "rms_mm", path, 0);
  pair.iterations = static_cast<int>(jsonio::get_int(j, "iterations", path, 0));
  pair.converged = jsonio::get_bool(j, "converged", path, 0);
  pair.restart_index = static_cast<int>(jsonio::get_int(j, "restart_index", path, 0));
  return pair;
}

void write_extrinsics_report(const std::string& path, const ExtrinsicsPair& pair) {
  json j;
  j["T1"] = pose_to_json(pair.T1);
  j["T2"] = pose_to_json(pair.T2);
  j["rms_mm"] = pair.final_rms_mm;
  j["iterations"] = pair.iterations;
  j["converged"] = pair.converged;
  j["restart_index"] = pair.restart_index;
  jsonio::write_text_file(path, j.dump(2) + "\n");
}

// ---- Mesh ----

TriMesh read_mesh(const std::string& path) {
  std::string text = jsonio::read_text_file(path);
  TriMesh mesh;
  size_t start = 0;
  long lineno = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    start = end + 1;
    ++lineno;

    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;

    if (tok[0] == "v") {
      if (tok.size() != 4) throw ParseError(path, lineno, "\"v\" needs exactly 3 coordinates");
      Eigen::Vector3d v;
      for (int i = 0; i < 3; ++i) v(i) = csv_number<double>(tok[static_cast<size_t>(i) + 1], path, lineno);
      if (!v.allFinite()) throw ParseError(path, lineno, "vertex must be finite");
      mesh.vertices.push_back(v);
    } else if (tok[0] == "f") {
      if (tok.size() != 4)
        throw ParseError(path, lineno, "\"f\" needs exactly 3 vertex indices (triangles only)");
      std::array<int, 3> tri{};
      for (int i = 0; i < 3; ++i) {
        int idx = csv_number<int>(tok[static_cast<size_t>(i) + 1], path, lineno);
        if (idx < 1) throw ParseError(path, lineno, "face indices are 1-based and positive");
        tri[static_cast<size_t>(i)] = idx - 1;
      }
      mesh.triangles.push_back(tri);
    } else {
      throw ParseError(path, lineno, "unsupported directive \"" + tok[0] + "\"");
    }
  }
  try {
    mesh.validate();
  } catch (const ValidationError& e) {
    rethrow_with_path(path, e);
  }
  return mesh;
}

void write_mesh(const std::string& path, const TriMesh& mesh) {
  std::string out;
  for (const Eigen::Vector3d& v : mesh.vertices) {
    out += "v " + format_double(v.x()) + " " + format_double(v.y()) + " " +
           format_double(v.z()) + "\n";
  }
  for (const std::array<int, 3>& f : mesh.triangles) {
    out += "f " + std::to_string(f[0] + 1) + " " + std::to_string(f[1] + 1) + " " +
           std::to_string(f[2] + 1) + "\n";
  }
  jsonio::write_text_file(path, out);
}

// ---- Binary rasters ----

DepthMap read_depth_map_f32(const std::string& path) {
  RasterDims d = read_sidecar(path, "units", "mm");
  std::string bytes = read_bytes(path);
  size_t n = static_cast<size_t>(d.width) * static_cast<size_t>(d.height);
  check_payload_size(path, bytes.size(), 4 * n);
  DepthMap map(d.width, d.height);
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
  for (size_t i = 0; i < n; ++i)
    map.values[i] = static_cast<double>(std::bit_cast<float>(take_u32(b + 4 * i)));
  check_depth_positive(map, path);
  return map;
}

void write_depth_map_f32(const std::string& path, const DepthMap& map) {
  check_depth_positive(map, path);
  std::string bytes;
  bytes.reserve(4 * map.values.size());
  for (double v : map.values) put_u32(bytes, std::bit_cast<uint32_t>(static_cast<float>(v)));
  write_bytes(path, bytes);
  write_sidecar(path, map.width, map.height, "units", "mm");
}

std::vector<double> read_raster_f64(const std::string& path, int& width, int& height) {
  RasterDims d = read_sidecar(path, "dtype", "f64");
  std::string bytes = read_bytes(path);
  size_t n = static_cast<size_t>(d.width) * static_cast<size_t>(d.height);
  check_payload_size(path, bytes.size(), 8 * n);
  std::vector<double> values(n);
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
  for (size_t i = 0; i < n; ++i) values[i] = std::bit_cast<double>(take_u64(b + 8 * i));
  width = d.width;
  height = d.height;
  return values;
}

void write_raster_f64(const std::string& path, const std::vector<double>& values,
                      int width, int height) {
  if (values.size() != static_cast<size_t>(width) * static_cast<size_t>(height))
    throw ValidationError(path + ": raster size does not match its dimensions");
  std::string bytes;
  bytes.reserve(8 * values.size());
  for (double v : values) put_u64(bytes, std::bit_cast<uint64_t>(v));
  write_bytes(path, bytes);
  write_sidecar(path, width, height, "dtype", "f64");
}

std::vector<uint32_t> read_counts_u32(const std::string& path, int& width, int& height) {
  RasterDims d = read_sidecar(path, "dtype", "u32");
  std::string bytes = read_bytes(path);
  size_t n = static_cast<size_t>(d.width) * static_cast<size_t>(d.height);
  check_payload_size(path, bytes.size(), 4 * n);
  std::vector<uint32_t> counts(n);
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data());
  for (size_t i = 0; i < n; ++i) counts[i] = take_u32(b + 4 * i);
  width = d.width;
  height = d.height;
  return counts;
}

void write_counts_u32(const std::string& path, const std::vector<uint32_t>& counts,
                      int width, int height) {
  if (counts.size() != static_cast<size_t>(width) * static_cast<size_t>(height))
    throw ValidationError(path + ": raster size does not match its dimensions");
  std::string bytes;
  bytes.reserve(4 * counts.size());
  for (uint32_t v : counts) put_u32(bytes, v);
  write_bytes(path, bytes);
  write_sidecar(path, width, height, "dtype", "u32");
}

// ---- Keyframe store ----

std::vector<std::string> write_keyframes(const std::string& dir,
                                         const std::vector<KeyFrame>& kfs) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "rasters", ec);
  if (ec) throw IoError("cannot create " + dir + "/rasters: " + ec.message());

  for (const KeyFrame& kf : kfs) {
    kf.validate();
    const Intrinsics& a = kfs.front().K;
    const Intrinsics& b = kf.K;
    if (a.model != b.model || a.fx != b.fx || a.fy != b.fy || a.cx != b.cx || a.cy != b.cy ||
        a.w != b.w || a.width != b.width || a.height != b.height)
      throw ValidationError("keyframe store requires one shared camera model");
  }

  std::vector<std::string> written;
  std::vector<json> lines;
  lines.reserve(kfs.size());
  for (const KeyFrame& kf : kfs) {
    std::string base = "rasters/" + kf_basename(kf.kf_id, kf.revision);
    std::string idepth_rel = base + "_idepth.bin";
    std::string ivar_rel = base + "_ivar.bin";
    write_raster_f64((fs::path(dir) / idepth_rel).string(), kf.idepth, kf.K.width, kf.K.height);
    write_raster_f64((fs::path(dir) / ivar_rel).string(), kf.ivar, kf.K.width, kf.K.height);
    written.push_back(idepth_rel);
    written.push_back(idepth_rel + ".json");
    written.push_back(ivar_rel);
    written.push_back(ivar_rel + ".json");

    json j;
    j["kf_id"] = kf.kf_id;
    j["revision"] = kf.revision;
    j["t_ns"] = kf.t_ns;
    j["pose_est"] = pose_to_json(kf.pose_est);
    j["idepth"] = idepth_rel;
    j["ivar"] = ivar_rel;
    lines.push_back(j);
  }
  write_lines((fs::path(dir) / "keyframes.jsonl").string(), lines);
  written.insert(written.begin(), "keyframes.jsonl");
  return written;
}

std::vector<KeyFrame> read_keyframes(const std::string& index_path, const Intrinsics& K) {
  fs::path base = fs::path(index_path).parent_path();
  std::vector<KeyFrame> kfs;
  for_each_line(index_path, [&](const std::string& text, long line) {
    json j = jsonio::parse_line(text, index_path, line);
    jsonio::expect_keys(j, {"kf_id", "revision", "t_ns", "pose_est", "idepth", "ivar"},
                        index_path, line);
    KeyFrame kf;
    kf.kf_id = jsonio::get_int(j, "kf_id", index_path, line);
    kf.revision = static_cast<int>(jsonio::get_int(j, "revision", index_path, line));
    kf.t_ns = jsonio::get_int(j, "t_ns", index_path, line);
    kf.pose_est = pose_from_json(j.at("pose_est"), index_path, line);
    kf.K = K;

    int w = 0, h = 0;
    std::string idepth_path = (base / jsonio::get_str(j, "idepth", index_path, line)).string();
    kf.idepth = read_raster_f64(idepth_path, w, h);
    if (w != K.width || h != K.height)
      throw ValidationError(idepth_path + ": raster dimensions do not match the intrinsics");
    std::string ivar_path = (base / jsonio::get_str(j, "ivar", index_path, line)).string();
    kf.ivar = read_raster_f64(ivar_path, w, h);
    if (w != K.width || h != K.height)
      throw ValidationError(ivar_path + ": raster dimensions do not match the intrinsics");

    try {
      kf.validate();
    } catch (const ValidationError& e) {
      throw ParseError(index_path, line, e.what());
    }
    kfs.push_back(std::move(kf));
  });
  return kfs;
}

std::vector<std::string> write_truth(const std::string& dir,
                                     const std::vector<TruthRecord>& records) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "rasters", ec);
  if (ec) throw IoError("cannot create " + dir + "/rasters: " + ec.message());

  std::vector<std::string> written;
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const TruthRecord& r : records) {
    if (!r.pose_true.is_rigid(1e-9))
      throw ValidationError("truth poses must be rigid (scale 1)");
    check_depth_positive(r.depth_gt, "truth raster for " + kf_basename(r.kf_id, r.revision));
    std::string rel = "rasters/" + kf_basename(r.kf_id, r.revision) + "_gt.bin";
    write_raster_f64((fs::path(dir) / rel).string(), r.depth_gt.values, r.depth_gt.width,
                     r.depth_gt.height);
    written.push_back(rel);
    written.push_back(rel + ".json");

    json j;
    j["kf_id"] = r.kf_id;
    j["revision"] = r.revision;
    j["pose_true"] = pose_to_json(r.pose_true);
    j["depth_gt"] = rel;
    lines.push_back(j);
  }
  write_lines((fs::path(dir) / "truth.jsonl").string(), lines);
  written.insert(written.begin(), "truth.jsonl");
  return written;
}

std::vector<TruthRecord> read_truth(const std::string& index_path) {
  fs::path base = fs::path(index_path).parent_path();
  std::vector<TruthRecord> records;
  for_each_line(index_path, [&](const std::string& text, long line) {
    json j = jsonio::parse_line(text, index_path, line);
    jsonio::expect_keys(j, {"kf_id", "revision", "pose_true", "depth_gt"}, index_path, line);
    TruthRecord r;
    r.kf_id = jsonio::get_int(j, "kf_id", index_path, line);
    r.revision = static_cast<int>(jsonio::get_int(j, "revision", index_path, line));
    r.pose_true = pose_from_json(j.at("pose_true"), index_path, line);
    if (!r.pose_true.is_rigid(1e-9))
      throw ParseError(index_path, line, "truth pose must be rigid (scale 1)");

    std::string raster = (base / jsonio::get_str(j, "depth_gt", index_path, line)).string();
    int w = 0, h = 0;
    std::vector<double> values = read_raster_f64(raster, w, h);
    r.depth_gt = DepthMap(w, h);
    r.depth_gt.values = std::move(values);
    check_depth_positive(r.depth_gt, raster);
    records.push_back(std::move(r));
  });
  return records;
}

// ---- CSV reports ----

namespace {

const char* kStatsHeader =
    "kf_id,revision,t_ns,lambda,n_points,mean_err_mm,var_err_mm2,min_err_mm,max_err_mm";
const char* kPointHeader = "kf_id,revision,p,q,e_depth_mm";

std::vector<std::string> csv_rows(const std::string& path, const char* header) {
  std::string text = jsonio::read_text_file(path);
  std::vector<std::string> rows;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    rows.push_back(line);
    start = end + 1;
  }
  if (rows.empty() || rows[0] != header)
    throw ParseError(path, 1, std::string("expected header \"") + header + "\"");
  return rows;
}

}  // namespace

void write_keyframe_stats_csv(const std::string& path,
                              const std::vector<KeyframeStatsRow>& rows) {
  std::string out = std::string(kStatsHeader) + "\n";
  for (const KeyframeStatsRow& r : rows) {
    out += csv_int(r.kf_id) + "," + csv_int(r.revision) + "," + csv_int(r.t_ns) + "," +
           format_double(r.lambda) + "," + csv_int(r.n_points) + "," +
           format_double(r.mean_err_mm) + "," + format_double(r.var_err_mm2) + "," +
           format_double(r.min_err_mm) + "," + format_double(r.max_err_mm) + "\n";
  }
  jsonio::write_text_file(path, out);
}

std::vector<KeyframeStatsRow> read_keyframe_stats_csv(const std::string& path) {
  std::vector<std::string> rows = csv_rows(path, kStatsHeader);
  std::vector<KeyframeStatsRow> out;
  for (size_t i = 1; i < rows.size(); ++i) {
    long line = static_cast<long>(i) + 1;
    std::vector<std::string> f = split_csv(rows[i]);
    if (f.size() != 9) throw ParseError(path, line, "expected 9 fields");
    KeyframeStatsRow r;
    r.kf_id = csv_number<int64_t>(f[0], path, line);
    r.revision = csv_number<int>(f[1], path, line);
    r.t_ns = csv_number<int64_t>(f[2], path, line);
    r.lambda = csv_number<double>(f[3], path, line);
    r.n_points = csv_number<int64_t>(f[4], path, line);
    r.mean_err_mm = csv_number<double>(f[5], path, line);
    r.var_err_mm2 = csv_number<double>(f[6], path, line);
    r.min_err_mm = csv_number<double>(f[7], path, line);
    r.max_err_mm = csv_number<double>(f[8], path, line);
    out.push_back(r);
  }
  return out;
}

void write_point_csv(const std::string& path, const std::vector<PointRecord>& records) {
  std::string out = std::string(kPointHeader) + "\n";
  for (const PointRecord& r : records) {
    out += csv_int(r.kf_id) + "," + csv_int(r.revision) + "," + csv_int(r.p) + "," +
           csv_int(r.q) + "," + format_double(r.e_depth_mm) + "\n";
  }
  jsonio::write_text_file(path, out);
}

std::vector<PointRecord> read_point_csv(const std::string& path) {
  std::vector<std::string> rows = csv_rows(path, kPointHeader);
  std::vector<PointRecord> out;
  for (size_t i = 1; i < rows.size(); ++i) {
    long line = static_cast<long>(i) + 1;
    std::vector<std::string> f = split_csv(rows[i]);
    if (f.size() != 5) throw ParseError(path, line, "expected 5 fields");
    PointRecord r;
    r.kf_id = csv_number<int64_t>(f[0], path, line);
    r.revision = csv_number<int>(f[1], path, line);
    r.p = csv_number<int>(f[2], path, line);
    r.q = csv_number<int>(f[3], path, line);
    r.e_depth_mm = csv_number<double>(f[4], path, line);
    out.push_back(r);
  }
  return out;
}

// ---- Heatmap rendering ----

void write_heatmap(const DepthMap& map, const HeatmapStyle& style, const std::string& path) {
  if (map.width <= 0 || map.height <= 0) throw ValidationError("heatmap needs a non-empty map");
  if (!(style.min_mm < style.max_mm))
    throw ValidationError("heatmap clamp range needs min < max");

  std::string out = "P6\n" + std::to_string(map.width) + " " + std::to_string(map.height) +
                    "\n255\n";
  out.reserve(out.size() + 3 * map.values.size());
  double span = style.max_mm - style.min_mm;
  for (double v : map.values) {
    if (std::isnan(v)) {
      for (int c = 0; c < 3; ++c) out.push_back(static_cast<char>(style.invalid[static_cast<size_t>(c)]));
      continue;
    }
    double f = (std::clamp(v, style.min_mm, style.max_mm) - style.min_mm) / span;
    for (int c = 0; c < 3; ++c) {
      double lo = style.lo[static_cast<size_t>(c)];
      double hi = style.hi[static_cast<size_t>(c)];
      out.push_back(static_cast<char>(std::lround(lo + f * (hi - lo))));
    }
  }
  write_bytes(path, out);
}

// ---- Manifest ----

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    std::streamsize got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<size_t>(got));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);

  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  std::vector<ManifestEntry> files = manifest.files;
  std::sort(files.begin(), files.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  json arr = json::array();
  for (const ManifestEntry& e : files) {
    json f;
    f["path"] = e.path;
    f["sha256"] = e.sha256;
    f["role"] = e.role;
    arr.push_back(f);
  }
  json j;
  j["files"] = arr;
  j["seed"] = manifest.seed;
  j["config_echo"] = manifest.config_echo;
  jsonio::write_text_file(path, j.dump(2) + "\n");
}

Manifest read_manifest(const std::string& path, bool verify) {
  json j = jsonio::parse_document(path);
  jsonio::expect_keys(j, {"files", "seed", "config_echo"}, path, 0);
  if (!j.at("files").is_array()) throw ParseError(path, 0, "\"files\" must be an array");
  if (!j.at("config_echo").is_object())
    throw ParseError(path, 0, "\"config_echo\" must be an object");

  Manifest m;
  m.seed = jsonio::get_uint(j, "seed", path, 0);
  m.config_echo = j.at("config_echo");

  fs::path base = fs::path(path).parent_path();
  std::vector<std::string> seen;
  for (const json& f : j.at("files")) {
    jsonio::expect_keys(f, {"path", "sha256", "role"}, path, 0);
    ManifestEntry e;
    e.path = jsonio::get_str(f, "path", path, 0);
    e.sha256 = jsonio::get_str(f, "sha256", path, 0);
    e.role = jsonio::get_str(f, "role", path, 0);

    fs::path rel(e.path);
    if (e.path.empty() || rel.is_absolute() ||
        std::find(rel.begin(), rel.end(), "..") != rel.end())
      throw ValidationError(path + ": manifest paths must be relative, got \"" + e.path + "\"");
    if (std::find(seen.begin(), seen.end(), e.path) != seen.end())
      throw ValidationError(path + ": duplicate manifest entry \"" + e.path + "\"");
    seen.push_back(e.path);
    if (e.sha256.size() != 64 ||
        e.sha256.find_first_not_of("0123456789abcdef") != std::string::npos)
      throw ValidationError(path + ": bad sha256 for \"" + e.path + "\"");
    const auto& roles = known_roles();
    if (std::find(roles.begin(), roles.end(), e.role) == roles.end())
      throw ValidationError(path + ": unknown role \"" + e.role + "\"");

    if (verify) {
      std::string full = (base / rel).string();
      if (!fs::exists(full)) throw IoError(path + ": listed file missing: " + e.path);
      std::string actual = sha256_file(full);
      if (actual != e.sha256)
        throw ValidationError(path + ": hash mismatch for \"" + e.path + "\" (expected " +
                              e.sha256 + ", found " + actual + ")");
    }
    m.files.push_back(e);
  }
  return m;
}

}  // namespace slamacc
