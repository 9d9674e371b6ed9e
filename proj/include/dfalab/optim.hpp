#pragma once

#include <cstdint>

#include "dfalab/model.hpp"

namespace dfalab {

struct OptimHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double clip_norm = 1.0;  // <= 0 disables clipping
};

/// Adam first/second moments, shaped like the parameters.
struct AdamState {
  std::int64_t step = 0;
  Params m;
  Params v;
};

AdamState make_adam_state(const Params& params);

/// Euclidean norm over every gradient entry, in the canonical tensor order.
double global_grad_norm(const Gradients& grads);

/// Scales all gradients so the global norm is at most `max_norm`; returns
/// the pre-clip norm. No-op when max_norm <= 0.
double clip_global_norm(Gradients& grads, double max_norm);

/// One decoupled-weight-decay Adam step with bias correction. Clips first
/// (hyper.clip_norm), so `grads` is modified in place. Throws NumericError
/// on non-finite gradients so the harness can report divergence.
void apply_updates(Model& model, Gradients& grads, AdamState& state, const OptimHyper& hyper);

}  // namespace dfalab
