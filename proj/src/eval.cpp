#include "slamacc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "slamacc/error.hpp"

namespace slamacc {

namespace {

bool usable_depth(double v) { return std::isfinite(v) && v > 0.0; }

double median_of(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void KeyFrame::validate() const {
  K.validate();
  size_t expected = static_cast<size_t>(K.width) * static_cast<size_t>(K.height);
  if (idepth.size() != expected || ivar.size() != expected)
    throw ValidationError("keyframe " + std::to_string(kf_id) + " rev " +
                          std::to_string(revision) + ": raster size " +
                          std::to_string(idepth.size()) + "/" + std::to_string(ivar.size()) +
                          " does not match " + std::to_string(K.width) + "x" +
                          std::to_string(K.height));
  for (size_t i = 0; i < idepth.size(); ++i)
    if (usable_depth(idepth[i]) && !(std::isfinite(ivar[i]) && ivar[i] >= 0.0))
      throw ValidationError("keyframe " + std::to_string(kf_id) +
                            ": bad inverse-depth variance at pixel " + std::to_string(i));
}

ScaleEstimate estimate_scale(const std::vector<double>& delta,
                             const std::vector<double>& d_gt, ScaleMethod method,
                             const std::vector<double>& var) {
  if (delta.size() != d_gt.size())
    throw ValidationError("estimate_scale: got " + std::to_string(delta.size()) +
                          " depths vs " + std::to_string(d_gt.size()) + " references");
  if (method == ScaleMethod::VarianceWeighted && var.size() != delta.size())
    throw ValidationError("estimate_scale: weighted method needs one variance per pair");

  double num = 0.0, den = 0.0;
  std::vector<double> ratios;
  size_t n = 0;
  for (size_t i = 0; i < delta.size(); ++i) {
    if (!usable_depth(delta[i]) || !usable_depth(d_gt[i])) continue;
    switch (method) {
      case ScaleMethod::LeastSquares:
        num += delta[i] * d_gt[i];
        den += delta[i] * delta[i];
        break;
      case ScaleMethod::MedianRatio:
        ratios.push_back(d_gt[i] / delta[i]);
        break;
      case ScaleMethod::VarianceWeighted:
        if (!usable_depth(var[i])) continue;
        num += delta[i] * d_gt[i] / var[i];
        den += delta[i] * delta[i] / var[i];
        break;
    }
    ++n;
  }
  if (n == 0) throw ValidationError("estimate_scale: no usable depth pair");

  double lambda;
  if (method == ScaleMethod::MedianRatio) {
    lambda = median_of(ratios);
  } else {
    if (den == 0.0) throw ValidationError("estimate_scale: zero normal equation");
    lambda = num / den;
  }
  if (!usable_depth(lambda))
    throw ValidationError("estimate_scale: non-positive scale " + std::to_string(lambda));

  ScaleEstimate e;
  e.lambda = lambda;
  e.n_pairs = n;
  return e;
}

ScaleEstimate estimate_keyframe_scale(const KeyFrame& kf, const DepthMap& d_gt, ScaleMethod method) {
  kf.validate();
  if (d_gt.width != kf.K.width || d_gt.height != kf.K.height)
    throw ValidationError("estimate_scale: ground-truth raster does not match the keyframe");

  std::vector<double> delta, gt, var;
  for (int p = 0; p < kf.K.height; ++p) {
    for (int q = 0; q < kf.K.width; ++q) {
      size_t i = static_cast<size_t>(p) * kf.K.width + q;
      if (!usable_depth(kf.idepth[i])) continue;
      double d = 1.0 / kf.idepth[i];
      delta.push_back(d);
      gt.push_back(d_gt.at(p, q));
      // Depth variance from inverse-depth variance: var(1/x) ~ var(x)/x^4.
      var.push_back(kf.ivar[i] / (kf.idepth[i] * kf.idepth[i] * kf.idepth[i] * kf.idepth[i]));
    }
  }
  ScaleEstimate e = estimate_scale(delta, gt, method, var);
  e.kf_id = kf.kf_id;
  e.revision = kf.revision;
  return e;
}

DepthMap apply_scale(const KeyFrame& kf, double lambda) {
  kf.validate();
  if (!usable_depth(lambda))
    throw ValidationError("apply_scale: scale must be finite and > 0, got " +
                          std::to_string(lambda));
  DepthMap out(kf.K.width, kf.K.height);
  for (size_t i = 0; i < kf.idepth.size(); ++i)
    if (usable_depth(kf.idepth[i])) out.values[i] = lambda / kf.idepth[i];
  return out;
}

PointErrors point_depth_errors(const DepthMap& d_gt, const DepthMap& d_slam, int64_t kf_id,
                               int revision) {
  if (d_gt.width != d_slam.width || d_gt.height != d_slam.height)
    throw ValidationError("point_depth_errors: raster dimensions differ");
  PointErrors out;
  for (int p = 0; p < d_gt.height; ++p) {
    for (int q = 0; q < d_gt.width; ++q) {
      bool gt_ok = std::isfinite(d_gt.at(p, q));
      bool slam_ok = std::isfinite(d_slam.at(p, q));
      if (gt_ok && slam_ok)
        out.records.push_back({kf_id, revision, p, q, d_gt.at(p, q) - d_slam.at(p, q)});
      else if (gt_ok)
        ++out.n_gt_only;
      else if (slam_ok)
        ++out.n_slam_only;
    }
  }
  return out;
}

KeyframeStats keyframe_error_stats(const std::vector<double>& errors_mm) {
  if (errors_mm.empty())
    throw ValidationError("keyframe_error_stats: no error records");
  KeyframeStats s;
  s.count = errors_mm.size();
  s.min_mm = errors_mm.front();
  s.max_mm = errors_mm.front();
  double sum = 0.0;
  for (double e : errors_mm) {
    sum += e;
    s.min_mm = std::min(s.min_mm, e);
    s.max_mm = std::max(s.max_mm, e);
  }
  s.mean_mm = sum / static_cast<double>(s.count);
  if (s.count == 1) {
    s.var_mm2 = 0.0;
    s.degenerate = true;
    return s;
  }
  double ss = 0.0;
  for (double e : errors_mm) ss += (e - s.mean_mm) * (e - s.mean_mm);
  s.var_mm2 = ss / static_cast<double>(s.count - 1);
  return s;
}

PixelMap pixelwise_error_map(const std::vector<PointRecord>& records, int width, int height) {
  if (width < 1 || height < 1)
    throw ValidationError("pixelwise_error_map: raster must be at least 1x1");
  size_t total = static_cast<size_t>(width) * static_cast<size_t>(height);
  std::vector<double> sums(total, 0.0);
  PixelMap out;
  out.counts.assign(total, 0);
  for (const PointRecord& r : records) {
    if (r.p < 0 || r.p >= height || r.q < 0 || r.q >= width)
      throw ValidationError("pixelwise_error_map: record at (" + std::to_string(r.p) + ", " +
                            std::to_string(r.q) + ") outside the raster");
    size_t i = static_cast<size_t>(r.p) * width + r.q;
    sums[i] += std::abs(r.e_depth_mm);
    ++out.counts[i];
  }
  out.mean_abs = DepthMap(width, height);
  for (size_t i = 0; i < total; ++i)
    if (out.counts[i] > 0) out.mean_abs.values[i] = sums[i] / out.counts[i];
  return out;
}

DepthMap median_downsample(const DepthMap& map, int k) {
  if (k < 1 || k % 2 == 0)
    throw ValidationError("median_downsample: window must be odd and >= 1, got " +
                          std::to_string(k));
  int ow = (map.width + k - 1) / k;
  int oh = (map.height + k - 1) / k;
  DepthMap out(ow, oh);
  std::vector<double> block;
  for (int bp = 0; bp < oh; ++bp) {
    for (int bq = 0; bq < ow; ++bq) {
      block.clear();
      for (int p = bp * k; p < std::min((bp + 1) * k, map.height); ++p)
        for (int q = bq * k; q < std::min((bq + 1) * k, map.width); ++q)
          if (std::isfinite(map.at(p, q))) block.push_back(map.at(p, q));
      if (!block.empty()) out.at(bp, bq) = median_of(block);
    }
  }
  return out;
}

EffectiveRegion effective_region(const DepthMap& map, double threshold_mm) {
  if (!(threshold_mm > 0.0) || !std::isfinite(threshold_mm))
    throw ValidationError("effective_region: threshold must be finite and > 0");
  EffectiveRegion out;
  out.width = map.width;
  out.height = map.height;
  out.mask.assign(map.values.size(), 0);
  size_t covered = 0;
  for (size_t i = 0; i < map.values.size(); ++i) {
    if (std::isfinite(map.values[i]) && map.values[i] <= threshold_mm) {
      out.mask[i] = 1;
      ++covered;
    }
  }
  out.fraction = map.values.empty()
                     ? 0.0
                     : static_cast<double>(covered) / static_cast<double>(map.values.size());
  return out;
}

std::vector<CloudPoint> assemble_point_cloud(const KeyFrame& kf, const Pose& P_gt,
                                             double lambda,
                                             const std::vector<PointRecord>& records) {
  kf.validate();
  if (!usable_depth(lambda))
    throw ValidationError("assemble_point_cloud: scale must be finite and > 0");

  std::unordered_map<size_t, double> tag;
  for (const PointRecord& r : records)
    if (r.kf_id == kf.kf_id && r.revision == kf.revision)
      tag[static_cast<size_t>(r.p) * kf.K.width + r.q] = r.e_depth_mm;

  std::vector<CloudPoint> cloud;
  for (int p = 0; p < kf.K.height; ++p) {
    for (int q = 0; q < kf.K.width; ++q) {
      size_t i = static_cast<size_t>(p) * kf.K.width + q;
      if (!usable_depth(kf.idepth[i])) continue;
      double depth = lambda / kf.idepth[i];
      Ray ray = pixel_ray(kf.K, p, q);
      Eigen::Vector3d cam = ray.dir * (depth / ray.dir.z());
      CloudPoint pt;
      pt.xyz_mm = transform_point(P_gt, cam);
      pt.p = p;
      pt.q = q;
      auto it = tag.find(i);
      pt.e_depth_mm = it == tag.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
      cloud.push_back(pt);
    }
  }
  return cloud;
}

}  // namespace slamacc
