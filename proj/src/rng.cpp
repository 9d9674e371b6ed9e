#include "dfalab/rng.hpp"

#include <cmath>
#include <numbers>

namespace dfalab {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

RngState::RngState(std::uint64_t seed) : seed_(seed), key_(mix64(seed + kGolden)) {}

std::uint64_t RngState::next_u64() {
  ++pos_;
  return mix64(key_ + pos_ * kGolden);
}

double RngState::next_unit() {
  // 53-bit mantissa shifted into (0, 1); never exactly 0 or 1.
  return static_cast<double>(next_u64() >> 11) * 0x1p-53 + 0x1p-54;
}

double RngState::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = next_unit();
  double u2 = next_unit();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

RngState RngState::split(std::uint64_t label) const {
  return RngState(seed_, mix64(key_ ^ mix64(label + kGolden)));
}

RngState RngState::split(std::string_view label) const {
  return split(fnv1a(label));
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

Eigen::MatrixXd gaussian(RngState& rng, Eigen::Index rows, Eigen::Index cols,
                         double std_dev) {
  if (!(std_dev > 0.0)) {
    throw ParameterError("gaussian: std must be positive, got " +
                         std::to_string(std_dev));
  }
  if (rows < 0 || cols < 0) {
    throw ParameterError("gaussian: negative extent");
  }
  Eigen::MatrixXd out(rows, cols);
  double* data = out.data();
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    data[i] = rng.next_normal() * std_dev;
  }
  return out;
}

}  // namespace dfalab
