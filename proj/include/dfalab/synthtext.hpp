#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace dfalab {

/// Deterministic pseudo-English: Zipf-weighted words over a fixed syllable
/// inventory, grouped into sentences and paragraphs. The output has byte
/// statistics rich enough for a byte-level model to learn from (casing,
/// spaces, punctuation, repeated words) while requiring no external data.
/// Exactly n_bytes long for n_bytes >= 1; same seed -> same text.
std::string synth_text(std::uint64_t seed, std::size_t n_bytes);

}  // namespace dfalab
