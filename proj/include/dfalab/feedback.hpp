#pragma once

#include <string>
#include <vector>

#include "dfalab/backward.hpp"
#include "dfalab/model.hpp"
#include "dfalab/rng.hpp"

namespace dfalab {

enum class FeedbackMode { Bp, DfaCanonical, DfaBlockwise, Shallow };

std::string to_string(FeedbackMode mode);
FeedbackMode feedback_mode_from_string(const std::string& name);
bool is_dfa_mode(FeedbackMode mode);

/// The fixed random feedback projection. One B, d_model x d_model, shared by
/// every block; never mutated after creation.
struct FeedbackMatrix {
  Matrix b;
  double init_std = 0.0;
};

/// B ~ N(0, init_std^2) i.i.d., deterministic given the rng stream.
FeedbackMatrix make_feedback_matrix(int d_model, const RngState& rng, double init_std);

/// Per-token projection: row t of the result is B * e_t.
Matrix project_error(const FeedbackMatrix& fb, const Matrix& e);

/// Next-token objective over one window: positions 0..T-2 predict
/// tokens[1..T-1]; the loss is the mean over those T-1 positions and the
/// error signal is dLoss/dLogits with an all-zero final row.
CrossEntropyResult next_token_loss(const Matrix& logits, const std::vector<int>& tokens);

/// Error signal delivered to the blocks: the loss gradient at the
/// pre-projector hidden states (tokens x d_model, never vocabulary-width),
/// obtained by backpropagating through the projector and final norm only.
struct ErrorSignal {
  Matrix e;
};

/// `tokens` must be the sequence the tape was recorded on (consistency
/// error otherwise); targets are the next-token shift of that sequence.
ErrorSignal preprojector_error(const Model& model, const ForwardTape& tape,
                               const std::vector<int>& tokens);

/// Activation-derivative choice at a DFA application site. ReLU sites use
/// ReluPrime (or the deliberately mismatched TanhPrime); sites with no
/// elementwise non-linearity (attention and output projections) use One.
enum class DfaDeriv { ReluPrime, TanhPrime, One };

/// The layer-local DFA rule: grad = h_prev^T [(B e) (.) f'(a)], i.e. the
/// gradient-convention transpose of delta-W = -[(B e) (.) f'(a)] h_prev^T
/// summed over token positions. When the site is wider than d_model (the
/// MLP's first layer), B e is tiled cyclically across the extra columns.
Matrix dfa_layer_update(const FeedbackMatrix& fb, const Matrix& e, const Matrix& pre_act,
                        const Matrix& prev_act, DfaDeriv deriv);

struct UpdateResult {
  Gradients grads;
  double loss = 0.0;
};

/// One gradient computation under the requested strategy. All four modes
/// train the last block, final norm and projector with exact BP; they
/// differ in what the remaining blocks and the embeddings receive:
///   Bp            full backpropagation everywhere.
///   DfaCanonical  raw B e applied at every weight of every non-final block
///                 via dfa_layer_update (no within-block backprop); non-final
///                 layer norms stay frozen; embeddings receive raw B e.
///   DfaBlockwise  B e delivered at each non-final block's output, then
///                 block_backward with the config's residual/derivative
///                 switches distributes it; embeddings take the first
///                 block's input feedback.
///   Shallow       zero gradient outside the BP-trained head slice.
/// `fb` may be null for Bp and Shallow; DFA modes require it.
/// `parallel_blocks` computes per-block DFA updates on worker threads;
/// results are bitwise-identical to the sequential path.
UpdateResult compute_updates(FeedbackMode mode, const Model& model, const ForwardTape& tape,
                             const FeedbackMatrix* fb, bool parallel_blocks = false);

}  // namespace dfalab
