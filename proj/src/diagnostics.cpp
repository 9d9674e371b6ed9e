#include "dfalab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dfalab/backward.hpp"
#include "dfalab/errors.hpp"

namespace dfalab {

AlignmentRecord alignment(const Model& model, const ForwardTape& tape,
                          const std::vector<int>& tokens, const FeedbackMatrix& fb,
                          FeedbackMode mode, std::int64_t step) {
  if (!is_dfa_mode(mode)) {
    throw UsageError("alignment is defined only for DFA modes, got " + to_string(mode));
  }
  if (tokens != tape.tokens) {
    throw ConsistencyError("alignment tokens do not match the forward tape");
  }
  const UpdateResult dfa = compute_updates(mode, model, tape, &fb);
  const UpdateResult bp = compute_updates(FeedbackMode::Bp, model, tape, nullptr);

  std::vector<std::pair<std::string, const Matrix*>> dfa_tensors, bp_tensors;
  dfa.grads.for_each(
      [&](const std::string& n, const Matrix& m) { dfa_tensors.emplace_back(n, &m); });
  bp.grads.for_each(
      [&](const std::string& n, const Matrix& m) { bp_tensors.emplace_back(n, &m); });

  AlignmentRecord record;
  record.step = step;
  record.entries.reserve(dfa_tensors.size());
  for (std::size_t i = 0; i < dfa_tensors.size(); ++i) {
    const Matrix& a = *dfa_tensors[i].second;
    const Matrix& b = *bp_tensors[i].second;
    AlignmentEntry entry;
    entry.tensor = dfa_tensors[i].first;
    const double na = a.norm();
    const double nb = b.norm();
    if (na > 0.0 && nb > 0.0) {
      if ((a.array() == b.array()).all()) {
        entry.cosine = 1.0;  // bitwise-equal gradients get an exact cosine
      } else {
        entry.cosine = (a.array() * b.array()).sum() / (na * nb);
      }
    }
    record.entries.push_back(std::move(entry));
  }
  return record;
}

double central_diff(const std::function<double(double)>& f, double x, double epsilon) {
  if (epsilon <= 0.0) throw ParameterError("central_diff needs epsilon > 0");
  return (f(x + epsilon) - f(x - epsilon)) / (2.0 * epsilon);
}

namespace {

double next_token_loss_of(const Model& model, const std::vector<int>& tokens) {
  const ForwardTape tape = forward(model, tokens);
  if (!all_finite(tape.logits)) throw NumericError("non-finite logits during probe");
  return next_token_loss(tape.logits, tokens).loss;
}

}  // namespace

FiniteDiffReport finite_diff_check(const Model& model, const std::vector<int>& tokens,
                                   double epsilon, int coords_per_tensor,
                                   std::uint64_t probe_seed) {
  if (epsilon <= 0.0) throw ParameterError("finite_diff_check needs epsilon > 0");
  const ForwardTape tape = forward(model, tokens);
  const CrossEntropyResult sig = next_token_loss(tape.logits, tokens);
  const Gradients grads = backward_bp(model, tape, sig.error_signal);

  Model probe = model;  // mutated coordinate-by-coordinate, then restored

  std::vector<std::pair<std::string, Matrix*>> probe_tensors;
  probe.params.for_each(
      [&](const std::string& n, Matrix& m) { probe_tensors.emplace_back(n, &m); });
  std::vector<const Matrix*> grad_tensors;
  grads.for_each([&](const std::string&, const Matrix& m) { grad_tensors.push_back(&m); });

  const RngState base(probe_seed);
  FiniteDiffReport report;
  constexpr double kDenomFloor = 1e-5;

  for (std::size_t ti = 0; ti < probe_tensors.size(); ++ti) {
    Matrix& tensor = *probe_tensors[ti].second;
    const Matrix& grad = *grad_tensors[ti];
    const std::int64_t size = tensor.size();

    std::set<std::int64_t> coords;
    if (size <= coords_per_tensor) {
      for (std::int64_t c = 0; c < size; ++c) coords.insert(c);
    } else {
      RngState picker = base.split(probe_tensors[ti].first);
      while (static_cast<int>(coords.size()) < coords_per_tensor) {
        coords.insert(static_cast<std::int64_t>(picker.next_u64() % size));
      }
    }

    FiniteDiffEntry entry;
    entry.tensor = probe_tensors[ti].first;
    entry.probed = static_cast<int>(coords.size());
    for (const std::int64_t c : coords) {
      double* slot = tensor.data() + c;
      const double saved = *slot;
      const double fd = central_diff(
          [&](double x) {
            *slot = x;
            return next_token_loss_of(probe, tokens);
          },
          saved, epsilon);
      *slot = saved;
      const double analytic = grad.data()[c];
      const double denom = std::max({std::abs(fd), std::abs(analytic), kDenomFloor});
      entry.max_rel_err = std::max(entry.max_rel_err, std::abs(fd - analytic) / denom);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace dfalab
