#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace slamacc {

// Deterministic random source. mt19937_64 output is fully specified by the
// standard and the derived doubles below avoid the implementation-defined
// std::*_distribution adaptors, so streams are reproducible across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0)
      : gen_(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1))) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second value is cached.
  double gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double gauss(double sigma) { return sigma * gauss(); }

  Eigen::Vector3d gauss3(double sigma) {
    Eigen::Vector3d v;
    v << gauss(sigma), gauss(sigma), gauss(sigma);
    return v;
  }

  Eigen::Vector3d unit_vector3() {
    Eigen::Vector3d v;
    double n = 0.0;
    do {
      v << gauss(), gauss(), gauss();
      n = v.norm();
    } while (n < 1e-12);
    return v / n;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace slamacc
