#pragma once

#include <cstdint>
#include <vector>

#include "slamacc/raycast.hpp"

namespace slamacc {

// One stored SLAM keyframe. Updates to the same kf_id are kept as separate
// revisions. Rasters hold inverse depths in SLAM units (1/mm before the
// scale factor is applied); entries <= 0 or non-finite mark invalid pixels.
struct KeyFrame {
  int64_t kf_id = 0;
  int revision = 0;
  int64_t t_ns = 0;
  Pose pose_est;               // camera in the SLAM virtual space
  std::vector<double> idepth;  // row-major, 1/mm (unscaled)
  std::vector<double> ivar;    // inverse-depth variances
  Intrinsics K;

  void validate() const;
  bool valid_pixel(int p, int q) const {
    double v = idepth[static_cast<size_t>(p) * K.width + q];
    return std::isfinite(v) && v > 0.0;
  }
};

struct ScaleEstimate {
  int64_t kf_id = 0;
  int revision = 0;
  double lambda = 0.0;
  size_t n_pairs = 0;
};

enum class ScaleMethod {
  LeastSquares,      // minimizes sum (d_gt - lambda*delta)^2
  MedianRatio,       // median of d_gt/delta
  VarianceWeighted,  // least squares with 1/sigma^2 weights
};

struct PointRecord {
  int64_t kf_id = 0;
  int revision = 0;
  int p = 0, q = 0;      // row, column
  double e_depth_mm = 0.0;  // signed, ground truth minus SLAM
};

struct PointErrors {
  std::vector<PointRecord> records;  // row-major pixel order
  size_t n_gt_only = 0;              // valid ground truth, invalid SLAM
  size_t n_slam_only = 0;            // valid SLAM, ray missed the mesh
};

struct KeyframeStats {
  double mean_mm = 0.0;
  double var_mm2 = 0.0;
  size_t count = 0;
  bool degenerate = false;  // single record, variance reported as 0
  double min_mm = 0.0;
  double max_mm = 0.0;
};

struct PixelMap {
  DepthMap mean_abs;             // per-pixel mean |e|, NaN where unobserved
  std::vector<uint32_t> counts;  // observations per pixel
};

struct EffectiveRegion {
  int width = 0, height = 0;
  PixelMask mask;     // nonzero where mean |e| <= threshold
  double fraction = 0.0;  // covered share of the whole raster
};

struct CloudPoint {
  Eigen::Vector3d xyz_mm = Eigen::Vector3d::Zero();
  int p = 0, q = 0;
  double e_depth_mm = 0.0;  // NaN when no matching error record exists
};

/// Scale factor lambda such that lambda * delta best matches d_gt. Pairs
/// with a non-positive or non-finite side are skipped; the weighted method
/// additionally requires var (depth variances, mm^2) and skips non-positive
/// entries. Throws ValidationError when no usable pair remains.
ScaleEstimate estimate_scale(const std::vector<double>& delta,
                             const std::vector<double>& d_gt,
                             ScaleMethod method = ScaleMethod::LeastSquares,
                             const std::vector<double>& var = {});

/// Pairs every valid keyframe pixel with the matching D_GT value and
/// estimates the keyframe's scale. Depth variances for the weighted method
/// come from the ivar raster (var(1/x) propagation).
ScaleEstimate estimate_keyframe_scale(const KeyFrame& kf, const DepthMap& d_gt,
                             ScaleMethod method = ScaleMethod::LeastSquares);

/// Metric SLAM depth map: lambda / idepth per valid pixel, NaN elsewhere.
DepthMap apply_scale(const KeyFrame& kf, double lambda);

/// Signed per-pixel depth errors d_gt - d_slam where both maps are valid;
/// single-sided pixels are only counted in the coverage tallies.
PointErrors point_depth_errors(const DepthMap& d_gt, const DepthMap& d_slam,
                               int64_t kf_id = 0, int revision = 0);

/// Mean, sample variance (divisor Y-1), count, and extrema of signed errors.
KeyframeStats keyframe_error_stats(const std::vector<double>& errors_mm);

/// Per-pixel mean absolute error and observation count over all records.
PixelMap pixelwise_error_map(const std::vector<PointRecord>& records, int width,
                             int height);

/// Median filter with stride k (k odd): each output cell covers a k x k
/// block; empty blocks yield NaN. Output is ceil(W/k) x ceil(H/k).
DepthMap median_downsample(const DepthMap& map, int k);

/// Pixels whose mean absolute error stays within the threshold.
EffectiveRegion effective_region(const DepthMap& map, double threshold_mm);

/// Back-projects every valid pixel so its camera-space z equals the scaled
/// depth, then moves it through P_gt (camera to pattern). Error tags are
/// looked up from records of the same keyframe when provided.
std::vector<CloudPoint> assemble_point_cloud(const KeyFrame& kf, const Pose& P_gt,
                                             double lambda,
                                             const std::vector<PointRecord>& records = {});

}  // namespace slamacc
