#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace geoloc {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seedable generator with platform-independent output. The engine is
/// std::mt19937_64 (fully specified by the standard); the distributions are
/// implemented here because the standard library ones are not portable.
///
/// Stream splitting: Rng(seed, stream) seeds the engine with
/// splitmix64(seed ^ splitmix64(stream + 1)), so stream k of a run (for
/// example Monte-Carlo trial k) is independent of how many other streams ran.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Uniformly distributed unit vector.
  Eigen::Vector3d unit_vector();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace geoloc
