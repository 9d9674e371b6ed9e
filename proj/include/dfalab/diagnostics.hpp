#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dfalab/feedback.hpp"
#include "dfalab/model.hpp"

namespace dfalab {

struct AlignmentEntry {
  std::string tensor;
  /// Cosine between the flattened DFA-mode and BP gradients; empty when
  /// either side has zero norm (never NaN).
  std::optional<double> cosine;
};

struct AlignmentRecord {
  std::int64_t step = 0;
  std::vector<AlignmentEntry> entries;
};

/// Per-tensor cosine similarity between the gradients the DFA mode produces
/// and the true BP gradients on the same batch. Bitwise-equal nonzero pairs
/// report exactly 1.0. Only DFA modes are meaningful; BP or Shallow -> usage
/// error.
AlignmentRecord alignment(const Model& model, const ForwardTape& tape,
                          const std::vector<int>& tokens, const FeedbackMatrix& fb,
                          FeedbackMode mode, std::int64_t step = 0);

struct FiniteDiffEntry {
  std::string tensor;
  double max_rel_err = 0.0;
  int probed = 0;
};

struct FiniteDiffReport {
  std::vector<FiniteDiffEntry> entries;
  double max_rel_err = 0.0;
};

/// Symmetric difference quotient (f(x+eps) - f(x-eps)) / (2 eps).
double central_diff(const std::function<double(double)>& f, double x, double epsilon);

/// Central-difference check of backward_bp against the next-token loss:
/// probes at least `coords_per_tensor` randomly chosen coordinates per
/// tensor (every coordinate for small tensors) and reports the worst
/// relative error, floored at 1e-5 in the denominator so cancellation noise
/// on near-zero gradients does not masquerade as disagreement.
FiniteDiffReport finite_diff_check(const Model& model, const std::vector<int>& tokens,
                                   double epsilon, int coords_per_tensor = 32,
                                   std::uint64_t probe_seed = 0x0ddba11);

}  // namespace dfalab
