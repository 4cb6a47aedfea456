#include "slamacc/cli.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "slamacc/calib.hpp"
#include "slamacc/error.hpp"
#include "slamacc/eval.hpp"
#include "slamacc/io.hpp"
#include "slamacc/kinematics.hpp"
#include "slamacc/raycast.hpp"
#include "slamacc/simgen.hpp"
#include "slamacc/sync.hpp"
#include "json_util.hpp"

namespace slamacc {
namespace {

namespace fs = std::filesystem;

int64_t ms_to_ns(double ms) { return static_cast<int64_t>(std::llround(ms * 1e6)); }

std::string kf_tag(int64_t kf_id, int revision) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "kf_%06lld_r%02d", static_cast<long long>(kf_id), revision);
  return buf;
}

// Path of the manifest entry with the given role, resolved next to the
// manifest. Roles that make sense only once (everything but raster) must
// appear exactly once.
std::string role_path(const Manifest& man, const std::string& manifest_path,
                      const std::string& role) {
  const ManifestEntry* hit = nullptr;
  for (const ManifestEntry& e : man.files) {
    if (e.role != role) continue;
    if (hit) throw ValidationError("manifest lists more than one " + role + " file");
    hit = &e;
  }
  if (!hit) throw ValidationError("manifest lists no " + role + " file");
  return (fs::path(manifest_path).parent_path() / hit->path).string();
}

ScaleMethod parse_scale_method(const std::string& name) {
  if (name == "ls") return ScaleMethod::LeastSquares;
  if (name == "median") return ScaleMethod::MedianRatio;
  if (name == "weighted") return ScaleMethod::VarianceWeighted;
  throw ValidationError("unknown scale method: " + name);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
};

int run_simulate(const SimulateArgs& a) {
  SimConfig cfg = read_sim_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  Manifest man = generate_dataset(cfg, a.out);
  std::printf("simulate: %zu files, seed %llu -> %s\n", man.files.size(),
              static_cast<unsigned long long>(man.seed), a.out.c_str());
  return 0;
}

struct CalibrateArgs {
  std::string samples;
  std::string arm;
  std::string out;
  SolveOptions opts;
};

int run_calibrate(const CalibrateArgs& a) {
  std::vector<CalibSample> samples = read_calib_samples(a.samples);
  ArmModel model = read_arm_model(a.arm);
  ExtrinsicsPair pair = solve_extrinsics(samples, model, a.opts);
  write_extrinsics_report(a.out, pair);
  std::printf("calibrate: rms %.6f mm after %d iterations (restart %d) -> %s\n",
              pair.final_rms_mm, pair.iterations, pair.restart_index, a.out.c_str());
  if (!pair.converged)
    std::fprintf(stderr, "calibrate: warning: stopped at the iteration cap without converging\n");
  return 0;
}

struct SyncArgs {
  std::string frames;
  std::string joints;
  std::string out;
  std::string drops;
  double max_gap_ms = 50.0;
  bool nearest = false;
};

int run_sync(const SyncArgs& a) {
  FrameLog frames = read_frame_log(a.frames);
  JointLog joints = read_joint_log(a.joints);
  SyncOptions opts;
  opts.max_gap_ns = ms_to_ns(a.max_gap_ms);
  opts.policy = a.nearest ? InterpPolicy::Nearest : InterpPolicy::Linear;
  SyncResult res = synchronize_streams(frames, joints, opts);
  write_sync_packets(a.out, res.packets);
  if (!a.drops.empty()) write_sync_drops(a.drops, res.drops);
  std::printf("sync: %zu packets, %zu dropped -> %s\n", res.packets.size(),
              res.drops.size(), a.out.c_str());
  return 0;
}

struct EvaluateArgs {
  std::string manifest;
  std::string extrinsics;
  std::string mesh;
  std::string out;
  std::string scale_method = "ls";
  double max_gap_ms = 50.0;
  bool along_ray = false;
  bool cloud = false;
};

struct CloudRow {
  int64_t kf_id = 0;
  int revision = 0;
  CloudPoint point;
};

void write_cloud_csv(const std::string& path, const std::vector<CloudRow>& rows) {
  std::string out = "kf_id,revision,p,q,x_mm,y_mm,z_mm,e_depth_mm\n";
  for (const CloudRow& r : rows) {
    out += std::to_string(r.kf_id) + "," + std::to_string(r.revision) + "," +
           std::to_string(r.point.p) + "," + std::to_string(r.point.q) + "," +
           jsonio::format_double(r.point.xyz_mm.x()) + "," +
           jsonio::format_double(r.point.xyz_mm.y()) + "," +
           jsonio::format_double(r.point.xyz_mm.z()) + "," +
           jsonio::format_double(r.point.e_depth_mm) + "\n";
  }
  jsonio::write_text_file(path, out);
}

int run_evaluate(const EvaluateArgs& a) {
  ScaleMethod method = parse_scale_method(a.scale_method);
  Manifest man = read_manifest(a.manifest);
  JointLog joints = read_joint_log(role_path(man, a.manifest, "jointlog"));
  FrameLog frames = read_frame_log(role_path(man, a.manifest, "framelog"));
  Intrinsics K = read_intrinsics(role_path(man, a.manifest, "intrinsics"));
  ArmModel model = read_arm_model(role_path(man, a.manifest, "arm"));
  std::vector<KeyFrame> kfs = read_keyframes(role_path(man, a.manifest, "keyframes"), K);
  TriMesh mesh = read_mesh(a.mesh);
  ExtrinsicsPair ext = read_extrinsics_report(a.extrinsics);

  // Every keyframe must correspond to a frame-log entry with the same stamp.
  std::unordered_map<int64_t, int64_t> frame_time;
  for (const FrameRecord& f : frames.frames) frame_time[f.frame_id] = f.t_ns;
  for (const KeyFrame& kf : kfs) {
    auto it = frame_time.find(kf.kf_id);
    if (it == frame_time.end())
      throw ValidationError("keyframe " + std::to_string(kf.kf_id) +
                            " has no frame-log entry");
    if (it->second != kf.t_ns)
      throw ValidationError("keyframe " + std::to_string(kf.kf_id) +
                            " timestamp disagrees with the frame log");
  }

  ensure_dir(a.out);
  std::string raster_dir = (fs::path(a.out) / "rasters").string();
  ensure_dir(raster_dir);

  SyncOptions sopts;
  sopts.max_gap_ns = ms_to_ns(a.max_gap_ms);

  std::vector<KeyframeStatsRow> rows;
  std::vector<PointRecord> all_records;
  std::vector<CloudRow> cloud_rows;
  nlohmann::json skipped = nlohmann::json::array();
  size_t n_gt_only = 0, n_slam_only = 0;
  double lambda_sum = 0.0;

  auto skip = [&](const KeyFrame& kf, const char* reason) {
    skipped.push_back({{"kf_id", kf.kf_id}, {"revision", kf.revision}, {"reason", reason}});
    std::fprintf(stderr, "evaluate: skipping keyframe %lld r%d: %s\n",
                 static_cast<long long>(kf.kf_id), kf.revision, reason);
  };

  for (const KeyFrame& kf : kfs) {
    JointAngles angles;
    try {
      angles = interpolate_joints(joints, kf.t_ns, sopts);
    } catch (const ValidationError&) {
      skip(kf, "no joint data at the keyframe stamp");
      continue;
    }
    Pose camera_to_pattern = predict_camera_pose(ext.T1, ext.T2, model, angles);

    PixelMask mask(kf.idepth.size(), 0);
    for (size_t i = 0; i < kf.idepth.size(); ++i)
      mask[i] = std::isfinite(kf.idepth[i]) && kf.idepth[i] > 0.0;
    DepthMap d_gt = ground_truth_depth_map(camera_to_pattern, K, mesh, mask, a.along_ray);

    ScaleEstimate scale;
    try {
      scale = estimate_keyframe_scale(kf, d_gt, method);
    } catch (const ValidationError&) {
      skip(kf, "no valid pixel overlaps the mesh");
      continue;
    }
    DepthMap d_slam = apply_scale(kf, scale.lambda);
    PointErrors pe = point_depth_errors(d_gt, d_slam, kf.kf_id, kf.revision);
    n_gt_only += pe.n_gt_only;
    n_slam_only += pe.n_slam_only;
    if (pe.records.empty()) {
      skip(kf, "no pixel with both depths valid");
      continue;
    }

    std::vector<double> errors;
    errors.reserve(pe.records.size());
    for (const PointRecord& r : pe.records) errors.push_back(r.e_depth_mm);
    KeyframeStats stats = keyframe_error_stats(errors);
    rows.push_back({kf.kf_id, kf.revision, kf.t_ns, scale.lambda,
                    static_cast<int64_t>(stats.count), stats.mean_mm, stats.var_mm2,
                    stats.min_mm, stats.max_mm});
    lambda_sum += scale.lambda;

    DepthMap err(K.width, K.height);
    for (const PointRecord& r : pe.records) err.at(r.p, r.q) = r.e_depth_mm;
    write_raster_f64((fs::path(raster_dir) / ("err_" + kf_tag(kf.kf_id, kf.revision) + ".bin")).string(),
                     err.values, K.width, K.height);

    if (a.cloud) {
      for (const CloudPoint& cp :
           assemble_point_cloud(kf, camera_to_pattern, scale.lambda, pe.records))
        cloud_rows.push_back({kf.kf_id, kf.revision, cp});
    }
    all_records.insert(all_records.end(), pe.records.begin(), pe.records.end());
  }

  PixelMap pixel_map = pixelwise_error_map(all_records, K.width, K.height);
  write_raster_f64((fs::path(a.out) / "pixel_mean_abs.bin").string(),
                   pixel_map.mean_abs.values, K.width, K.height);
  write_counts_u32((fs::path(a.out) / "pixel_counts.bin").string(), pixel_map.counts,
                   K.width, K.height);
  write_keyframe_stats_csv((fs::path(a.out) / "keyframe_stats.csv").string(), rows);
  write_point_csv((fs::path(a.out) / "points.csv").string(), all_records);
  if (a.cloud) write_cloud_csv((fs::path(a.out) / "cloud.csv").string(), cloud_rows);

  KeyframeStats global;
  if (!all_records.empty()) {
    std::vector<double> pooled;
    pooled.reserve(all_records.size());
    for (const PointRecord& r : all_records) pooled.push_back(r.e_depth_mm);
    global = keyframe_error_stats(pooled);
  }
  nlohmann::json summary{
      {"along_ray", a.along_ray},
      {"width", K.width},
      {"height", K.height},
      {"scale_method", a.scale_method},
      {"keyframes_total", kfs.size()},
      {"keyframes_evaluated", rows.size()},
      {"skipped", skipped},
      {"lambda_mean", rows.empty() ? 0.0 : lambda_sum / static_cast<double>(rows.size())},
      {"n_points", all_records.size()},
      {"n_gt_only", n_gt_only},
      {"n_slam_only", n_slam_only},
      {"mean_err_mm", global.mean_mm},
      {"var_err_mm2", global.var_mm2},
      {"min_err_mm", global.min_mm},
      {"max_err_mm", global.max_mm},
  };
  jsonio::write_text_file((fs::path(a.out) / "summary.json").string(),
                          summary.dump(2) + "\n");
  std::printf("evaluate: %zu/%zu keyframes, %zu points, mean error %.6f mm -> %s\n",
              rows.size(), kfs.size(), all_records.size(), global.mean_mm, a.out.c_str());
  return 0;
}

struct ReportArgs {
  std::string eval_dir;
  std::string out;
  double threshold_mm = 2.0;
  int median_k = 3;
  double clamp_min_mm = 0.0;
  double clamp_max_mm = 5.0;
};

int run_report(const ReportArgs& a) {
  fs::path eval_dir(a.eval_dir);
  std::vector<KeyframeStatsRow> rows =
      read_keyframe_stats_csv((eval_dir / "keyframe_stats.csv").string());
  DepthMap mean_abs;
  mean_abs.values = read_raster_f64((eval_dir / "pixel_mean_abs.bin").string(),
                                    mean_abs.width, mean_abs.height);

  ensure_dir(a.out);
  HeatmapStyle style;
  style.min_mm = a.clamp_min_mm;
  style.max_mm = a.clamp_max_mm;

  // Per-keyframe error-magnitude heatmaps from the evaluation rasters.
  std::string summary_csv = "kf_id,revision,lambda,n_points,mean_err_mm,rms_err_mm,"
                            "max_abs_err_mm,heatmap\n";
  for (const KeyframeStatsRow& row : rows) {
    std::string tag = kf_tag(row.kf_id, row.revision);
    DepthMap err;
    err.values = read_raster_f64((eval_dir / "rasters" / ("err_" + tag + ".bin")).string(),
                                 err.width, err.height);
    for (double& v : err.values) v = std::abs(v);
    std::string heatmap_name = "heatmap_" + tag + ".ppm";
    write_heatmap(err, style, (fs::path(a.out) / heatmap_name).string());

    double n = static_cast<double>(row.n_points);
    double rms = n > 0.0
        ? std::sqrt(row.mean_err_mm * row.mean_err_mm + row.var_err_mm2 * (n - 1.0) / n)
        : 0.0;
    double max_abs = std::max(std::abs(row.min_err_mm), std::abs(row.max_err_mm));
    summary_csv += std::to_string(row.kf_id) + "," + std::to_string(row.revision) + "," +
                   jsonio::format_double(row.lambda) + "," + std::to_string(row.n_points) +
                   "," + jsonio::format_double(row.mean_err_mm) + "," +
                   jsonio::format_double(rms) + "," + jsonio::format_double(max_abs) + "," +
                   heatmap_name + "\n";
  }
  jsonio::write_text_file((fs::path(a.out) / "keyframe_summary.csv").string(), summary_csv);

  write_heatmap(mean_abs, style, (fs::path(a.out) / "heatmap_mean_abs.ppm").string());

  DepthMap median = median_downsample(mean_abs, a.median_k);
  write_raster_f64((fs::path(a.out) / "pixel_mean_abs_median.bin").string(), median.values,
                   median.width, median.height);
  write_heatmap(median, style, (fs::path(a.out) / "heatmap_mean_abs_median.ppm").string());

  EffectiveRegion region = effective_region(mean_abs, a.threshold_mm);
  std::vector<uint32_t> mask32(region.mask.begin(), region.mask.end());
  write_counts_u32((fs::path(a.out) / "effective_mask.bin").string(), mask32,
                   region.width, region.height);
  DepthMap vis(mean_abs.width, mean_abs.height);
  for (size_t i = 0; i < mean_abs.values.size(); ++i)
    if (std::isfinite(mean_abs.values[i]))
      vis.values[i] = mean_abs.values[i] <= a.threshold_mm ? 0.0 : 1.0;
  HeatmapStyle flag_style;
  flag_style.min_mm = 0.0;
  flag_style.max_mm = 1.0;
  write_heatmap(vis, flag_style, (fs::path(a.out) / "effective_region.ppm").string());

  nlohmann::json summary{
      {"keyframes", rows.size()},
      {"threshold_mm", a.threshold_mm},
      {"median_k", a.median_k},
      {"clamp_min_mm", a.clamp_min_mm},
      {"clamp_max_mm", a.clamp_max_mm},
      {"effective_fraction", region.fraction},
  };
  jsonio::write_text_file((fs::path(a.out) / "report_summary.json").string(),
                          summary.dump(2) + "\n");
  std::printf("report: %zu keyframes, effective fraction %.4f -> %s\n", rows.size(),
              region.fraction, a.out.c_str());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"SLAM reconstruction accuracy toolkit"};
  app.name("slamacc");
  app.require_subcommand(1);

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic dataset with ground truth");
  sim->add_option("--config", sim_args.config, "simulation config JSON")->required();
  sim->add_option("--out", sim_args.out, "output dataset directory")->required();
  sim->add_option("--seed", sim_args.seed, "override the config's RNG seed");

  CalibrateArgs cal_args;
  CLI::App* cal = app.add_subcommand("calibrate", "solve the robot-world/hand-eye extrinsics");
  cal->add_option("--samples", cal_args.samples, "calibration samples JSONL")->required();
  cal->add_option("--arm", cal_args.arm, "arm model JSON")->required();
  cal->add_option("--out", cal_args.out, "output report JSON")->required();
  cal->add_option("--rho", cal_args.opts.rho, "rotation weight, mm per rad")
      ->capture_default_str();
  cal->add_option("--restarts", cal_args.opts.restarts, "perturbed extra starts")
      ->capture_default_str();
  cal->add_option("--seed", cal_args.opts.seed, "RNG seed for the restarts")
      ->capture_default_str();
  cal->add_option("--max-iter", cal_args.opts.max_iter, "iteration cap per start")
      ->capture_default_str();
  cal->add_flag("--scale-free", cal_args.opts.scale_free, "also fit the two scales");

  SyncArgs sync_args;
  CLI::App* syn = app.add_subcommand("sync", "pair camera frames with interpolated joint angles");
  syn->add_option("--frames", sync_args.frames, "frame log JSONL")->required();
  syn->add_option("--joints", sync_args.joints, "joint log JSONL")->required();
  syn->add_option("--out", sync_args.out, "output packets JSONL")->required();
  syn->add_option("--drops", sync_args.drops, "also write dropped frames JSONL");
  syn->add_option("--max-gap-ms", sync_args.max_gap_ms, "widest joint-sample hole to bridge")
      ->capture_default_str();
  syn->add_flag("--nearest", sync_args.nearest, "nearest-sample lookup instead of interpolation");

  EvaluateArgs eval_args;
  CLI::App* eva = app.add_subcommand("evaluate", "measure SLAM depth accuracy against the mesh");
  eva->add_option("--manifest", eval_args.manifest, "dataset manifest JSON")->required();
  eva->add_option("--extrinsics", eval_args.extrinsics, "calibration report JSON")->required();
  eva->add_option("--mesh", eval_args.mesh, "control object OBJ mesh")->required();
  eva->add_option("--out", eval_args.out, "output directory")->required();
  eva->add_option("--scale-method", eval_args.scale_method, "ls, median, or weighted")
      ->check(CLI::IsMember({"ls", "median", "weighted"}))
      ->capture_default_str();
  eva->add_option("--max-gap-ms", eval_args.max_gap_ms, "widest joint-sample hole to bridge")
      ->capture_default_str();
  eva->add_flag("--along-ray", eval_args.along_ray, "along-ray distances instead of z-depth");
  eva->add_flag("--cloud", eval_args.cloud, "also write the pattern-space point cloud CSV");

  ReportArgs rep_args;
  CLI::App* rep = app.add_subcommand("report", "render heatmaps and summaries from an evaluation");
  rep->add_option("--eval", rep_args.eval_dir, "evaluate output directory")->required();
  rep->add_option("--out", rep_args.out, "output directory")->required();
  rep->add_option("--threshold", rep_args.threshold_mm, "effective-region error bound, mm")
      ->capture_default_str();
  rep->add_option("--median-k", rep_args.median_k, "median filter window (odd)")
      ->capture_default_str();
  rep->add_option("--clamp-min-mm", rep_args.clamp_min_mm, "heatmap clamp minimum")
      ->capture_default_str();
  rep->add_option("--clamp-max-mm", rep_args.clamp_max_mm, "heatmap clamp maximum")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return run_simulate(sim_args);
    if (cal->parsed()) return run_calibrate(cal_args);
    if (syn->parsed()) return run_sync(sync_args);
    if (eva->parsed()) return run_evaluate(eval_args);
    if (rep->parsed()) return run_report(rep_args);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace slamacc
