#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "slamacc/geom.hpp"

namespace slamacc {

enum class CameraModel { Pinhole, Fov };

struct Intrinsics {
  CameraModel model = CameraModel::Pinhole;
  double fx = 0.0, fy = 0.0;  // px
  double cx = 0.0, cy = 0.0;  // px
  double w = 0.0;             // FOV distortion parameter, rad (fov model only)
  int width = 0, height = 0;  // px

  void validate() const;
};

struct TriMesh {
  std::vector<Eigen::Vector3d> vertices;                // mm, pattern space
  std::vector<std::array<int, 3>> triangles;            // 0-based indices

  // Throws ValidationError on out-of-range indices or triangles with area
  // <= 1e-12 mm^2.
  void validate() const;
};

struct Ray {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();  // mm
  Eigen::Vector3d dir = Eigen::Vector3d::UnitZ();    // unit
};

struct DepthMap {
  int width = 0, height = 0;
  std::vector<double> values;  // row-major, mm; NaN marks invalid pixels

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h),
        values(static_cast<size_t>(w) * static_cast<size_t>(h),
               std::numeric_limits<double>::quiet_NaN()) {}

  double at(int p, int q) const { return values[static_cast<size_t>(p) * width + q]; }
  double& at(int p, int q) { return values[static_cast<size_t>(p) * width + q]; }

  size_t valid_count() const;
};

// Row-major byte raster; nonzero selects a pixel. Empty = all pixels.
using PixelMask = std::vector<uint8_t>;

struct RayHit {
  double t = 0.0;  // mm along the ray
  double u = 0.0, v = 0.0;  // barycentrics w.r.t. the triangle's v1, v2
};

struct MeshHit {
  double t = 0.0;
  size_t triangle = 0;
  double u = 0.0, v = 0.0;
};

/// Camera-space ray through the center of pixel (row p, column q). Pixel
/// centers sit at integer coordinates. Throws ValidationError for pixels
/// outside the raster.
Ray pixel_ray(const Intrinsics& K, int p, int q);

/// Moller-Trumbore without backface culling. Returns the hit with t >= 0 and
/// barycentrics inside the triangle, or nothing. |det| < eps counts as
/// parallel (miss).
std::optional<RayHit> ray_triangle_intersect(const Ray& r, const Eigen::Vector3d& v0,
                                             const Eigen::Vector3d& v1,
                                             const Eigen::Vector3d& v2,
                                             double eps = 1e-9);

/// Nearest intersection over every triangle of the mesh (brute force).
std::optional<MeshHit> nearest_hit(const Ray& r, const TriMesh& mesh, double eps = 1e-9);

/// Per-pixel ground-truth depths of the mesh as seen through camera pose P
/// (camera space to mesh/pattern space, scale 1). Depth is the z-component
/// of the hit point in camera space, or the along-ray distance when
/// along_ray is set. Pixels that miss (or are outside the mask) stay NaN.
DepthMap ground_truth_depth_map(const Pose& P, const Intrinsics& K, const TriMesh& mesh,
                                const PixelMask& mask = {}, bool along_ray = false,
                                double eps = 1e-9);

/// Axis-aligned cube of the given side, rotated by yaw about +z and then
/// translated to center; 12 outward-wound triangles.
TriMesh make_cube(double side_mm, const Eigen::Vector3d& center_mm, double yaw_rad = 0.0);

}  // namespace slamacc
