#include "slamacc/raycast.hpp"

#include <cmath>

#include "slamacc/error.hpp"

namespace slamacc {

void Intrinsics::validate() const {
  if (width < 1 || height < 1)
    throw ValidationError("intrinsics: raster must be at least 1x1");
  if (!(fx > 0.0) || !(fy > 0.0))
    throw ValidationError("intrinsics: focal lengths must be > 0");
  if (!(cx >= 0.0) || !(cx < width) || !(cy >= 0.0) || !(cy < height))
    throw ValidationError("intrinsics: principal point outside the raster");
  if (model == CameraModel::Fov && !(w > 0.0 && w < 3.14159265358979323846))
    throw ValidationError("intrinsics: fov parameter w must lie in (0, pi)");
}

void TriMesh::validate() const {
  int n = static_cast<int>(vertices.size());
  for (size_t i = 0; i < triangles.size(); ++i) {
    const auto& tri = triangles[i];
    for (int k : tri)
      if (k < 0 || k >= n)
        throw ValidationError("mesh: triangle " + std::to_string(i) +
                              " references vertex " + std::to_string(k) +
                              " out of range");
    Eigen::Vector3d e1 = vertices[static_cast<size_t>(tri[1])] - vertices[static_cast<size_t>(tri[0])];
    Eigen::Vector3d e2 = vertices[static_cast<size_t>(tri[2])] - vertices[static_cast<size_t>(tri[0])];
    if (0.5 * e1.cross(e2).norm() <= 1e-12)
      throw ValidationError("mesh: triangle " + std::to_string(i) + " is degenerate");
  }
}

size_t DepthMap::valid_count() const {
  size_t n = 0;
  for (double v : values)
    if (std::isfinite(v)) ++n;
  return n;
}

Ray pixel_ray(const Intrinsics& K, int p, int q) {
  K.validate();
  if (p < 0 || p >= K.height || q < 0 || q >= K.width)
    throw ValidationError("pixel_ray: pixel (" + std::to_string(p) + ", " +
                          std::to_string(q) + ") outside " + std::to_string(K.width) +
                          "x" + std::to_string(K.height) + " raster");
  double x = (q - K.cx) / K.fx;
  double y = (p - K.cy) / K.fy;
  if (K.model == CameraModel::Fov) {
    // ATAN model: map the distorted normalized radius back to the ideal one.
    double rd = std::sqrt(x * x + y * y);
    double two_tan = 2.0 * std::tan(K.w / 2.0);
    double factor = rd < 1e-12 ? K.w / two_tan : std::tan(rd * K.w) / (two_tan * rd);
    x *= factor;
    y *= factor;
  }
  Ray r;
  r.origin.setZero();
  r.dir = Eigen::Vector3d(x, y, 1.0).normalized();
  return r;
}

std::optional<RayHit> ray_triangle_intersect(const Ray& r, const Eigen::Vector3d& v0,
                                             const Eigen::Vector3d& v1,
                                             const Eigen::Vector3d& v2, double eps) {
  Eigen::Vector3d e1 = v1 - v0;
  Eigen::Vector3d e2 = v2 - v0;
  Eigen::Vector3d pvec = r.dir.cross(e2);
  double det = e1.dot(pvec);
  if (std::abs(det) < eps) return std::nullopt;
  double inv = 1.0 / det;
  Eigen::Vector3d tvec = r.origin - v0;
  double u = tvec.dot(pvec) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  Eigen::Vector3d qvec = tvec.cross(e1);
  double v = r.dir.dot(qvec) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  double t = e2.dot(qvec) * inv;
  if (t < 0.0) return std::nullopt;
  return RayHit{t, u, v};
}

std::optional<MeshHit> nearest_hit(const Ray& r, const TriMesh& mesh, double eps) {
  std::optional<MeshHit> best;
  for (size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& tri = mesh.triangles[i];
    auto hit = ray_triangle_intersect(r, mesh.vertices[static_cast<size_t>(tri[0])],
                                      mesh.vertices[static_cast<size_t>(tri[1])],
                                      mesh.vertices[static_cast<size_t>(tri[2])], eps);
    if (hit && (!best || hit->t < best->t)) best = MeshHit{hit->t, i, hit->u, hit->v};
  }
  return best;
}

DepthMap ground_truth_depth_map(const Pose& P, const Intrinsics& K, const TriMesh& mesh,
                                const PixelMask& mask, bool along_ray, double eps) {
  K.validate();
  mesh.validate();
  if (!P.is_rigid())
    throw ValidationError("ground_truth_depth_map: camera pose must have scale 1, got s=" +
                          std::to_string(P.s()));
  if (!mask.empty() && mask.size() != static_cast<size_t>(K.width) * static_cast<size_t>(K.height))
    throw ValidationError("ground_truth_depth_map: mask size does not match the raster");

  DepthMap out(K.width, K.height);
  const Eigen::Vector3d origin = P.t();
  for (int p = 0; p < K.height; ++p) {
    for (int q = 0; q < K.width; ++q) {
      if (!mask.empty() && !mask[static_cast<size_t>(p) * K.width + q]) continue;
      Ray cam = pixel_ray(K, p, q);
      Ray world;
      world.origin = origin;
      world.dir = P.q() * cam.dir;
      auto hit = nearest_hit(world, mesh, eps);
      if (!hit) continue;
      double depth = along_ray ? hit->t : hit->t * cam.dir.z();
      if (depth > 0.0) out.at(p, q) = depth;
    }
  }
  return out;
}

TriMesh make_cube(double side_mm, const Eigen::Vector3d& center_mm, double yaw_rad) {
  if (!(side_mm > 0.0)) throw ValidationError("make_cube: side must be > 0");
  double h = side_mm / 2.0;
  Eigen::Matrix3d rz = Eigen::AngleAxisd(yaw_rad, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    Eigen::Vector3d corner((i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? h : -h);
    m.vertices.push_back(rz * corner + center_mm);
  }
  // Two triangles per face, wound so the normals point outward.
  m.triangles = {
      {0, 2, 1}, {1, 2, 3},  // -z
      {4, 5, 6}, {5, 7, 6},  // +z
      {0, 1, 4}, {1, 5, 4},  // -y
      {2, 6, 3}, {3, 6, 7},  // +y
      {0, 4, 2}, {2, 4, 6},  // -x
      {1, 3, 5}, {3, 7, 5},  // +x
  };
  return m;
}

}  // namespace slamacc
