#pragma once

#include <cstdint>
#include <string_view>

#include <Eigen/Core>

#include "dfalab/errors.hpp"

namespace dfalab {

/// Splittable counter-based random number generator.
///
/// A sample is a pure function of (key, position): the generator hashes the
/// counter through a SplitMix64-style finalizer, so identical seed plus
/// identical call sequence yields a bitwise-identical stream. `split`
/// derives an independent child stream from a label without disturbing the
/// parent's position, which lets every parameter tensor own its own stream.
class RngState {
 public:
  RngState() : RngState(0) {}
  explicit RngState(std::uint64_t seed);

  /// Next raw 64-bit word; advances the stream position by one.
  std::uint64_t next_u64();

  /// Uniform double in (0, 1).
  double next_unit();

  /// Standard normal sample (Box-Muller; consumes two words per pair,
  /// caching the second sample).
  double next_normal();

  /// Child stream derived from an integer label. Independent of the
  /// parent's position; splitting is stable under unrelated extra draws.
  RngState split(std::uint64_t label) const;
  RngState split(std::string_view label) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return pos_; }

 private:
  RngState(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key) {}

  std::uint64_t seed_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t pos_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// FNV-1a hash, used for stable per-tensor stream labels and data hashes.
std::uint64_t fnv1a(std::string_view bytes);

/// rows x cols tensor of i.i.d. N(0, std^2) samples. Fills in storage
/// order, advancing `rng` deterministically. std must be positive.
Eigen::MatrixXd gaussian(RngState& rng, Eigen::Index rows, Eigen::Index cols,
                         double std_dev);

}  // namespace dfalab
