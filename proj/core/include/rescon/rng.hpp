#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace rescon {

/// Combines two seeds into one well-mixed 64-bit value (splitmix64 finalizer).
inline std::uint64_t mix_seeds(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic standard-normal stream.
///
/// Uses mt19937_64 plus an explicit Box-Muller transform instead of
/// std::normal_distribution, whose output sequence is implementation
/// defined. The draw sequence for a given seed is therefore fixed by this
/// code alone, which is what makes traces reproducible.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = to_unit(gen_());  // in (0, 1], so log(u1) is finite
    const double u2 = to_unit(gen_());
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Fills v with independent standard-normal draws, front to back.
  void fill(Eigen::VectorXd& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = next();
  }

 private:
  static double to_unit(std::uint64_t x) {
    return static_cast<double>((x >> 11) + 1ULL) * 0x1.0p-53;
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rescon
