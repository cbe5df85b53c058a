#ifndef SPS_RNG_HPP
#define SPS_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace sps {

/// Purposes keyed into per-replicate streams. Appending a tag never shifts
/// the streams of existing tags.
enum class StreamTag : std::uint64_t {
  Locations = 1,
  Field = 2,
  Split = 3,
  Segments = 4,
  Starts = 5,
  Diagnostic = 6,
};

/// splitmix64 finalizer (Steele, Lea, Flood 2014).
std::uint64_t mix64(std::uint64_t x);

/// Seed for replicate `replicate` and purpose `tag`: mix64(mix64(seed ^ replicate) ^ tag).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replicate, StreamTag tag);

/// Portable generator: std::mt19937_64 (fully specified by the standard) with
/// in-house transforms, so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via the Marsaglia polar method.
  double normal();
  /// Uniform integer in [0, bound), rejection-sampled.
  std::uint64_t below(std::uint64_t bound);

  /// Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<std::int64_t> permutation(std::int64_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sps

#endif  // SPS_RNG_HPP
