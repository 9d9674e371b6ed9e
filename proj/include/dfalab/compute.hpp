#pragma once

#include <cstdint>
#include <string>

#include "dfalab/errors.hpp"
#include "dfalab/feedback.hpp"

namespace dfalab {

/// One PFLOPS sustained for a day, in FLOP.
inline constexpr double kPfDayFlop = 1e15 * 86400.0;

enum class Accounting { Standard, Optimistic, ExactBlockwise };

inline std::string to_string(Accounting a) {
  switch (a) {
    case Accounting::Standard: return "standard";
    case Accounting::Optimistic: return "optimistic";
    case Accounting::ExactBlockwise: return "exact_blockwise";
  }
  throw ParameterError("unknown accounting");
}

/// N ~= 12 * n_layer * d_model^2 (embeddings and norms neglected; small
/// embedding-heavy models deviate well beyond the asymptotic accuracy).
inline std::int64_t param_count_estimate(int n_layer, int d_model) {
  if (n_layer < 1 || d_model < 1) {
    throw ParameterError("param_count_estimate needs positive n_layer and d_model");
  }
  return 12LL * n_layer * d_model * d_model;
}

/// Training FLOP for N parameters over D tokens.
///   BP              6ND under every accounting (its backward cost is exact).
///   DFA modes       standard 4ND; optimistic 2ND (the throughput-doubling
///                   bound where the backward is free); exact_blockwise
///                   4ND + 2 d_model^2 D (adds the feedback projection).
///   Shallow         2ND under every accounting (forward only; the topmost
///                   layer's update cost is neglected).
/// A single run logs all three accountings side by side, so every
/// (mode, accounting) pair is defined; modes without a cheaper bound simply
/// repeat their exact cost.
inline double training_cost(FeedbackMode mode, Accounting accounting, double n_params,
                            double tokens, int d_model) {
  if (n_params < 0.0 || tokens < 0.0) {
    throw ParameterError("training_cost needs nonnegative N and D");
  }
  if (d_model < 1) throw ParameterError("training_cost needs positive d_model");
  switch (mode) {
    case FeedbackMode::Bp:
      return 6.0 * n_params * tokens;
    case FeedbackMode::Shallow:
      return 2.0 * n_params * tokens;
    case FeedbackMode::DfaCanonical:
    case FeedbackMode::DfaBlockwise:
      switch (accounting) {
        case Accounting::Standard: return 4.0 * n_params * tokens;
        case Accounting::Optimistic: return 2.0 * n_params * tokens;
        case Accounting::ExactBlockwise:
          return 4.0 * n_params * tokens +
                 2.0 * static_cast<double>(d_model) * static_cast<double>(d_model) * tokens;
      }
      throw ParameterError("unknown accounting");
  }
  throw ParameterError("unknown feedback mode");
}

inline double to_pf_days(double flop) {
  if (flop < 0.0) throw ParameterError("to_pf_days needs nonnegative FLOP");
  return flop / kPfDayFlop;
}

}  // namespace dfalab
