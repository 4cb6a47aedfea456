#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "slamacc/calib.hpp"
#include "slamacc/cli.hpp"
#include "slamacc/error.hpp"
#include "slamacc/eval.hpp"
#include "slamacc/geom.hpp"
#include "slamacc/io.hpp"
#include "slamacc/kinematics.hpp"
#include "slamacc/raycast.hpp"

namespace py = pybind11;
using namespace slamacc;

namespace {

Eigen::Vector4d quat_to_wxyz(const Eigen::Quaterniond& q) {
  return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
}

Pose make_pose(const Eigen::Vector4d& q_wxyz, const Eigen::Vector3d& t_mm, double s,
               const std::string& source, const std::string& target) {
  Eigen::Quaterniond q(q_wxyz(0), q_wxyz(1), q_wxyz(2), q_wxyz(3));
  return Pose(q, t_mm, s, source, target);
}

py::array_t<double> depth_to_array(const DepthMap& m) {
  py::array_t<double> a({m.height, m.width});
  std::copy(m.values.begin(), m.values.end(), a.mutable_data());
  return a;
}

DepthMap depth_from_array(const py::array& obj) {
  auto a = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(obj);
  if (!a || a.ndim() != 2)
    throw ValidationError("depth map must be a 2-D float array");
  DepthMap m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), m.values.begin());
  return m;
}

PixelMask mask_from_object(const py::object& obj, const Intrinsics& K) {
  if (obj.is_none()) return {};
  auto a = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>::ensure(obj);
  if (!a || a.ndim() != 2 || a.shape(0) != K.height || a.shape(1) != K.width)
    throw ValidationError("mask must be a (height, width) array matching the intrinsics");
  return PixelMask(a.data(), a.data() + a.size());
}

ScaleMethod parse_scale_method(const std::string& name) {
  if (name == "ls") return ScaleMethod::LeastSquares;
  if (name == "median") return ScaleMethod::MedianRatio;
  if (name == "weighted") return ScaleMethod::VarianceWeighted;
  throw ValidationError("unknown scale method: " + name);
}

}  // namespace

PYBIND11_MODULE(_slamacc, m) {
  m.doc() = "Accuracy evaluation toolkit for monocular SLAM reconstructions.";
  m.attr("__version__") = "0.1.0";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    } catch (const ValidationError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::class_<Pose>(m, "Pose",
                   "Sim(3) transform between two labeled spaces (mm, unit quaternion).")
      .def(py::init(&make_pose), py::arg("q_wxyz"), py::arg("t_mm"),
           py::arg("s") = 1.0, py::arg("source") = "", py::arg("target") = "")
      .def_static("identity", &Pose::identity, py::arg("source") = "",
                  py::arg("target") = "")
      .def_property_readonly("q_wxyz",
                             [](const Pose& p) { return quat_to_wxyz(p.q()); })
      .def_property_readonly("t_mm", &Pose::t)
      .def_property_readonly("s", &Pose::s)
      .def_property_readonly("source", &Pose::source)
      .def_property_readonly("target", &Pose::target)
      .def("matrix", &Pose::matrix, "Homogeneous 4x4 matrix s*R | t.")
      .def("is_rigid", &Pose::is_rigid, py::arg("tol") = 1e-12)
      .def("__mul__", [](const Pose& a, const Pose& b) { return compose(a, b); })
      .def("__repr__", [](const Pose& p) {
        return "Pose('" + p.source() + "' -> '" + p.target() +
               "', s=" + std::to_string(p.s()) + ")";
      });

  m.def("compose", &compose, py::arg("a"), py::arg("b"),
        "a * b; label-checked when both poses are labeled.");
  m.def("inverse", &inverse, py::arg("p"));
  m.def("transform_point", &transform_point, py::arg("p"), py::arg("x_mm"),
        "Apply the pose to a 3-D point: s*R*x + t.");

  py::class_<Intrinsics>(m, "Intrinsics", "Camera intrinsics (pixel units).")
      .def_static(
          "pinhole",
          [](double fx, double fy, double cx, double cy, int width, int height) {
            Intrinsics K;
            K.model = CameraModel::Pinhole;
            K.fx = fx; K.fy = fy; K.cx = cx; K.cy = cy;
            K.width = width; K.height = height;
            K.validate();
            return K;
          },
          py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"),
          py::arg("width"), py::arg("height"))
      .def_static(
          "fov",
          [](double fx, double fy, double cx, double cy, double w, int width,
             int height) {
            Intrinsics K;
            K.model = CameraModel::Fov;
            K.fx = fx; K.fy = fy; K.cx = cx; K.cy = cy; K.w = w;
            K.width = width; K.height = height;
            K.validate();
            return K;
          },
          py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("w"),
          py::arg("width"), py::arg("height"))
      .def_readonly("fx", &Intrinsics::fx)
      .def_readonly("fy", &Intrinsics::fy)
      .def_readonly("cx", &Intrinsics::cx)
      .def_readonly("cy", &Intrinsics::cy)
      .def_readonly("w", &Intrinsics::w)
      .def_readonly("width", &Intrinsics::width)
      .def_readonly("height", &Intrinsics::height)
      .def_property_readonly("model", [](const Intrinsics& K) {
        return K.model == CameraModel::Pinhole ? "pinhole" : "fov";
      });

  py::class_<TriMesh>(m, "TriMesh", "Triangle mesh in pattern space (mm).")
      .def_property_readonly("n_vertices",
                             [](const TriMesh& t) { return t.vertices.size(); })
      .def_property_readonly("n_triangles",
                             [](const TriMesh& t) { return t.triangles.size(); })
      .def_property_readonly("vertices",
                             [](const TriMesh& t) {
                               py::array_t<double> a(
                                   {static_cast<py::ssize_t>(t.vertices.size()),
                                    py::ssize_t(3)});
                               double* out = a.mutable_data();
                               for (const Eigen::Vector3d& v : t.vertices) {
                                 *out++ = v.x(); *out++ = v.y(); *out++ = v.z();
                               }
                               return a;
                             })
      .def_property_readonly("triangles", [](const TriMesh& t) {
        py::array_t<int> a({static_cast<py::ssize_t>(t.triangles.size()),
                            py::ssize_t(3)});
        int* out = a.mutable_data();
        for (const std::array<int, 3>& tri : t.triangles) {
          *out++ = tri[0]; *out++ = tri[1]; *out++ = tri[2];
        }
        return a;
      });

  m.def("make_cube", &make_cube, py::arg("side_mm"), py::arg("center_mm"),
        py::arg("yaw_rad") = 0.0,
        "Axis-aligned cube rotated by yaw about +z, 12 triangles.");
  m.def("read_mesh", &read_mesh, py::arg("path"), "Load a Wavefront OBJ mesh.");

  m.def(
      "ground_truth_depth_map",
      [](const Pose& P, const Intrinsics& K, const TriMesh& mesh, py::object mask,
         bool along_ray) {
        return depth_to_array(
            ground_truth_depth_map(P, K, mesh, mask_from_object(mask, K), along_ray));
      },
      py::arg("pose"), py::arg("intrinsics"), py::arg("mesh"),
      py::arg("mask") = py::none(), py::arg("along_ray") = false,
      "Per-pixel mesh depths seen through the camera pose as a (height, width) "
      "array; misses are NaN.");

  py::class_<DhLink>(m, "DhLink", "One Denavit-Hartenberg table row.")
      .def_readonly("a_mm", &DhLink::a_mm)
      .def_readonly("alpha_rad", &DhLink::alpha_rad)
      .def_readonly("d_mm", &DhLink::d_mm)
      .def_readonly("theta0_rad", &DhLink::theta0_rad);

  py::class_<ArmModel>(m, "ArmModel", "Seven-joint arm: DH table plus offsets.")
      .def_property_readonly("links",
                             [](const ArmModel& a) {
                               return std::vector<DhLink>(a.links.begin(),
                                                          a.links.end());
                             })
      .def_readonly("base_offset", &ArmModel::base_offset)
      .def_readonly("tool_offset", &ArmModel::tool_offset);

  m.def("default_synthetic_arm", &default_synthetic_arm,
        "The arm used by the shipped configs and the dataset generator.");
  m.def("read_arm_model", &read_arm_model, py::arg("path"));
  m.def("forward_kinematics", &forward_kinematics, py::arg("model"),
        py::arg("angles"), "Gripper-to-base pose for a 7-vector of joint angles.");
  m.def("predict_camera_pose", &predict_camera_pose, py::arg("t1"), py::arg("t2"),
        py::arg("model"), py::arg("angles"),
        "Camera-to-pattern pose through the chain T1 * G(A) * T2.");

  py::class_<CalibSample>(m, "CalibSample",
                          "One calibration observation: joints plus measured pose.")
      .def(py::init([](const JointAngles& angles, const Pose& pose_calib,
                       int64_t t_ns) {
             CalibSample s;
             s.angles = angles;
             s.pose_calib = pose_calib;
             s.t_ns = t_ns;
             return s;
           }),
           py::arg("angles"), py::arg("pose_calib"), py::arg("t_ns") = 0)
      .def_readwrite("angles", &CalibSample::angles)
      .def_readwrite("pose_calib", &CalibSample::pose_calib)
      .def_readwrite("t_ns", &CalibSample::t_ns);

  m.def("read_calib_samples", &read_calib_samples, py::arg("path"));
  m.def("write_calib_samples", &write_calib_samples, py::arg("path"),
        py::arg("samples"));

  py::class_<ExtrinsicsPair>(m, "ExtrinsicsPair",
                             "Solved robot-to-pattern and camera-to-gripper poses.")
      .def_readonly("T1", &ExtrinsicsPair::T1)
      .def_readonly("T2", &ExtrinsicsPair::T2)
      .def_readonly("final_rms_mm", &ExtrinsicsPair::final_rms_mm)
      .def_readonly("iterations", &ExtrinsicsPair::iterations)
      .def_readonly("converged", &ExtrinsicsPair::converged)
      .def_readonly("restart_index", &ExtrinsicsPair::restart_index)
      .def_readonly("objective_trace", &ExtrinsicsPair::objective_trace);

  m.def(
      "solve_extrinsics",
      [](const std::vector<CalibSample>& samples, const ArmModel& model, double rho,
         bool scale_free, int max_iter, int restarts, uint64_t seed) {
        SolveOptions o;
        o.rho = rho;
        o.scale_free = scale_free;
        o.max_iter = max_iter;
        o.restarts = restarts;
        o.seed = seed;
        return solve_extrinsics(samples, model, o);
      },
      py::arg("samples"), py::arg("model"), py::arg("rho") = 100.0,
      py::arg("scale_free") = false, py::arg("max_iter") = 100,
      py::arg("restarts") = 8, py::arg("seed") = 0,
      "Levenberg-Marquardt fit of (T1, T2), multi-start with seeded perturbations.");
  m.def("read_extrinsics_report", &read_extrinsics_report, py::arg("path"));

  py::class_<ScaleEstimate>(m, "ScaleEstimate")
      .def_readonly("kf_id", &ScaleEstimate::kf_id)
      .def_readonly("revision", &ScaleEstimate::revision)
      .def_readonly("lambda_", &ScaleEstimate::lambda)
      .def_readonly("n_pairs", &ScaleEstimate::n_pairs);

  m.def(
      "estimate_scale",
      [](const std::vector<double>& delta, const std::vector<double>& d_gt,
         const std::string& method, const std::vector<double>& var) {
        return estimate_scale(delta, d_gt, parse_scale_method(method), var);
      },
      py::arg("delta"), py::arg("d_gt"), py::arg("method") = "ls",
      py::arg("var") = std::vector<double>{},
      "Scale factor lambda with lambda * delta ~ d_gt; method is one of "
      "'ls', 'median', 'weighted'.");

  py::class_<PointRecord>(m, "PointRecord", "One signed depth error at a pixel.")
      .def_readonly("kf_id", &PointRecord::kf_id)
      .def_readonly("revision", &PointRecord::revision)
      .def_readonly("p", &PointRecord::p)
      .def_readonly("q", &PointRecord::q)
      .def_readonly("e_depth_mm", &PointRecord::e_depth_mm);

  py::class_<PointErrors>(m, "PointErrors")
      .def_readonly("records", &PointErrors::records)
      .def_readonly("n_gt_only", &PointErrors::n_gt_only)
      .def_readonly("n_slam_only", &PointErrors::n_slam_only)
      .def_property_readonly("errors_mm", [](const PointErrors& pe) {
        py::array_t<double> a(static_cast<py::ssize_t>(pe.records.size()));
        double* out = a.mutable_data();
        for (const PointRecord& r : pe.records) *out++ = r.e_depth_mm;
        return a;
      });

  m.def(
      "point_depth_errors",
      [](const py::array& d_gt, const py::array& d_slam, int64_t kf_id,
         int revision) {
        return point_depth_errors(depth_from_array(d_gt), depth_from_array(d_slam),
                                  kf_id, revision);
      },
      py::arg("d_gt"), py::arg("d_slam"), py::arg("kf_id") = 0,
      py::arg("revision") = 0,
      "Signed errors d_gt - d_slam where both maps are valid.");

  py::class_<KeyframeStats>(m, "KeyframeStats")
      .def_readonly("mean_mm", &KeyframeStats::mean_mm)
      .def_readonly("var_mm2", &KeyframeStats::var_mm2)
      .def_readonly("count", &KeyframeStats::count)
      .def_readonly("degenerate", &KeyframeStats::degenerate)
      .def_readonly("min_mm", &KeyframeStats::min_mm)
      .def_readonly("max_mm", &KeyframeStats::max_mm);

  m.def("keyframe_error_stats", &keyframe_error_stats, py::arg("errors_mm"),
        "Mean, sample variance, count, and extrema of signed errors.");

  py::class_<PixelMap>(m, "PixelMap", "Per-pixel mean |e| and observation counts.")
      .def_property_readonly("mean_abs",
                             [](const PixelMap& pm) {
                               return depth_to_array(pm.mean_abs);
                             })
      .def_property_readonly("counts", [](const PixelMap& pm) {
        py::array_t<uint32_t> a({pm.mean_abs.height, pm.mean_abs.width});
        std::copy(pm.counts.begin(), pm.counts.end(), a.mutable_data());
        return a;
      });

  m.def(
      "pixelwise_error_map",
      [](const std::vector<PointRecord>& records, int width, int height) {
        return pixelwise_error_map(records, width, height);
      },
      py::arg("records"), py::arg("width"), py::arg("height"));

  m.def(
      "median_downsample",
      [](const py::array& map, int k) {
        return depth_to_array(median_downsample(depth_from_array(map), k));
      },
      py::arg("map"), py::arg("k"),
      "Median filter with odd stride k; empty blocks yield NaN.");

  py::class_<EffectiveRegion>(m, "EffectiveRegion")
      .def_readonly("width", &EffectiveRegion::width)
      .def_readonly("height", &EffectiveRegion::height)
      .def_readonly("fraction", &EffectiveRegion::fraction)
      .def_property_readonly("mask", [](const EffectiveRegion& r) {
        py::array_t<bool> a({r.height, r.width});
        bool* out = a.mutable_data();
        for (uint8_t v : r.mask) *out++ = v != 0;
        return a;
      });

  m.def(
      "effective_region",
      [](const py::array& map, double threshold_mm) {
        return effective_region(depth_from_array(map), threshold_mm);
      },
      py::arg("map"), py::arg("threshold_mm"),
      "Pixels whose mean absolute error stays within the threshold.");

  m.def("sha256_file", &sha256_file, py::arg("path"),
        "Hex SHA-256 digest of a file's bytes.");

  m.def("run_cli", &run_cli, py::arg("args"),
        "Run the command line interface; args exclude the program name. "
        "Returns the process exit code (0 ok, 1 validation, 2 I/O).");
}
