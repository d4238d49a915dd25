#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace pregrasp {

/// Deterministic random stream. All draws are derived from the raw engine
/// output with fixed arithmetic, so sequences are identical across standard
/// library implementations (std::*_distribution makes no such promise).
class RngStream {
 public:
  RngStream() : engine_(0) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; one cached value per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return draw % n;
  }

  Eigen::Vector3d uniform_in_box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
    return {uniform(lo.x(), hi.x()), uniform(lo.y(), hi.y()), uniform(lo.z(), hi.z())};
  }

  Eigen::Vector3d on_unit_sphere() {
    // Marsaglia rejection
    while (true) {
      const double a = uniform(-1.0, 1.0);
      const double b = uniform(-1.0, 1.0);
      const double s = a * a + b * b;
      if (s >= 1.0 || s == 0.0) continue;
      const double f = 2.0 * std::sqrt(1.0 - s);
      return {a * f, b * f, 1.0 - 2.0 * s};
    }
  }

  /// Uniform in the solid ball of the given radius.
  Eigen::Vector3d in_ball(double radius) {
    const double r = radius * std::cbrt(uniform());
    return r * on_unit_sphere();
  }

  /// Uniform random rotation (Shoemake's method).
  Eigen::Quaterniond uniform_quaternion() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double u3 = uniform();
    const double s1 = std::sqrt(1.0 - u1);
    const double s2 = std::sqrt(u1);
    return Eigen::Quaterniond(s1 * std::sin(2.0 * M_PI * u2), s1 * std::cos(2.0 * M_PI * u2),
                              s2 * std::sin(2.0 * M_PI * u3), s2 * std::cos(2.0 * M_PI * u3));
  }

  bool operator==(const RngStream& other) const {
    return engine_ == other.engine_ && has_spare_ == other.has_spare_ &&
           (!has_spare_ || spare_ == other.spare_);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent child seed from a base seed and a stream tag
/// (splitmix64 over the combined words).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace pregrasp
