#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace saddleflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Default tolerances shared across modules.
inline constexpr double kActiveTol = 1e-9;       // boundary-activity detection
inline constexpr double kMembershipTol = 1e-9;   // set-membership residual
inline constexpr double kPsdTol = 1e-10;         // eigenvalue cutoff for PSD checks
inline constexpr double kCertTol = 1e-8;         // KKT certificate residuals
inline constexpr double kStrictCompTol = 1e-6;   // strict-complementarity classification
inline constexpr int kConeEnumMaxRows = 12;      // active-subset enumeration limit (cone QP)
inline constexpr int kProjEnumMaxRows = 16;      // subset enumeration limit (polyhedron projection)
inline constexpr int kKktEnumMaxConstraints = 16;

// Invalid problem/set/config descriptions supplied by the user.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Internal consistency violations (certified-impossible values observed).
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic 64-bit stream used for sampling; stable across platforms,
// unlike std::uniform_real_distribution.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  Vector uniform_vector(Index n, double lo, double hi) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 mix(base ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  return mix.next_u64();
}

}  // namespace saddleflow
