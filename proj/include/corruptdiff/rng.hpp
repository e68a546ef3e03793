#pragma once

#include <cstdint>

namespace corruptdiff {

/// Deterministic random stream keyed by (seed, stream_id).
///
/// The generator is SplitMix64 (Steele/Lea/Flood constants): the state
/// advances by the golden-ratio increment 0x9E3779B97F4A7C15 and each output
/// is the standard 64-bit finalizer. Gaussians come from the Box-Muller
/// transform with the spare value cached. The same (seed, stream_id) always
/// replays the same sample sequence, so every randomized computation in this
/// project is reproducible by reconstructing its stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double next_unit();
  /// Uniform in (0, 1]; used where log(u) must stay finite.
  double next_unit_positive();
  /// Uniform in (-1, 1).
  double next_symmetric();
  double next_uniform(double lo, double hi);
  /// Standard normal via Box-Muller.
  double next_gaussian();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Derives an independent child stream. Depends only on (seed, stream_id,
  /// child), never on how much of this stream has been consumed.
  RngStream substream(std::uint64_t child) const;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t state_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace corruptdiff
