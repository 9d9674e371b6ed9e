#include "dfalab/feedback.hpp"

#include <functional>
#include <thread>
#include <utility>

#include "dfalab/errors.hpp"

namespace dfalab {

std::string to_string(FeedbackMode mode) {
  switch (mode) {
    case FeedbackMode::Bp: return "bp";
    case FeedbackMode::DfaCanonical: return "dfa_canonical";
    case FeedbackMode::DfaBlockwise: return "dfa_blockwise";
    case FeedbackMode::Shallow: return "shallow";
  }
  throw ParameterError("unknown feedback mode");
}

FeedbackMode feedback_mode_from_string(const std::string& name) {
  if (name == "bp") return FeedbackMode::Bp;
  if (name == "dfa_canonical") return FeedbackMode::DfaCanonical;
  if (name == "dfa_blockwise") return FeedbackMode::DfaBlockwise;
  if (name == "shallow") return FeedbackMode::Shallow;
  throw ParameterError("unknown feedback mode '" + name +
                       "' (expected bp, dfa_canonical, dfa_blockwise or shallow)");
}

bool is_dfa_mode(FeedbackMode mode) {
  return mode == FeedbackMode::DfaCanonical || mode == FeedbackMode::DfaBlockwise;
}

FeedbackMatrix make_feedback_matrix(int d_model, const RngState& rng, double init_std) {
  if (d_model < 1) {
    throw ParameterError("feedback matrix needs d_model >= 1, got " + std::to_string(d_model));
  }
  if (init_std <= 0.0) throw ParameterError("feedback matrix init_std must be positive");
  FeedbackMatrix fb;
  fb.init_std = init_std;
  RngState stream = rng;
  fb.b = gaussian(stream, d_model, d_model, init_std);
  return fb;
}

Matrix project_error(const FeedbackMatrix& fb, const Matrix& e) {
  if (e.cols() != fb.b.cols()) {
    throw DimensionError("error signal " + shape_str(e) + " does not conform with B " +
                         shape_str(fb.b));
  }
  return matmul(e, fb.b.transpose().eval());
}

CrossEntropyResult next_token_loss(const Matrix& logits, const std::vector<int>& tokens) {
  if (static_cast<Eigen::Index>(tokens.size()) != logits.rows()) {
    throw DimensionError("next_token_loss got " + std::to_string(tokens.size()) +
                         " tokens for logits " + shape_str(logits));
  }
  if (tokens.size() < 2) {
    throw LengthError("next-token loss needs at least 2 tokens, got " +
                      std::to_string(tokens.size()));
  }
  const Eigen::Index t = logits.rows();
  const std::vector<int> targets(tokens.begin() + 1, tokens.end());
  const CrossEntropyResult shifted =
      softmax_cross_entropy(logits.topRows(t - 1), targets);
  CrossEntropyResult out;
  out.loss = shifted.loss;
  out.error_signal = Matrix::Zero(t, logits.cols());
  out.error_signal.topRows(t - 1) = shifted.error_signal;
  return out;
}

ErrorSignal preprojector_error(const Model& model, const ForwardTape& tape,
                               const std::vector<int>& tokens) {
  if (tokens != tape.tokens) {
    throw ConsistencyError("preprojector_error tokens do not match the forward tape");
  }
  const CrossEntropyResult sig = next_token_loss(tape.logits, tokens);
  Gradients scratch;  // only the head slots are written
  return ErrorSignal{head_backward(model, tape, sig.error_signal, scratch)};
}

Matrix dfa_layer_update(const FeedbackMatrix& fb, const Matrix& e, const Matrix& pre_act,
                        const Matrix& prev_act, DfaDeriv deriv) {
  if (pre_act.rows() != e.rows() || prev_act.rows() != e.rows()) {
    throw DimensionError("dfa_layer_update site " + shape_str(pre_act) + " / " +
                         shape_str(prev_act) + " does not span the " +
                         std::to_string(e.rows()) + " token positions of e");
  }
  const Matrix projected = project_error(fb, e);
  Matrix site = Matrix(e.rows(), pre_act.cols());
  for (Eigen::Index j = 0; j < site.cols(); ++j) {
    site.col(j) = projected.col(j % projected.cols());
  }
  switch (deriv) {
    case DfaDeriv::ReluPrime:
      site.array() *= (pre_act.array() > 0.0).cast<double>();
      break;
    case DfaDeriv::TanhPrime:
      site.array() *= 1.0 - pre_act.array().tanh().square();
      break;
    case DfaDeriv::One:
      break;
  }
  return matmul(prev_act.transpose().eval(), site);
}

namespace {

/// Runs fn(l) for l in [0, n) either inline or on one thread per index.
/// The work items touch disjoint state, so the result cannot depend on
/// scheduling; the parallel path exists for the backward-unlocking contract.
void for_each_block(int n, bool parallel, const std::function<void(int)>& fn) {
  if (!parallel || n <= 1) {
    for (int l = 0; l < n; ++l) fn(l);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) workers.emplace_back(fn, l);
  for (std::thread& w : workers) w.join();
}

}  // namespace

UpdateResult compute_updates(FeedbackMode mode, const Model& model, const ForwardTape& tape,
                             const FeedbackMatrix* fb, bool parallel_blocks) {
  if (is_dfa_mode(mode) && fb == nullptr) {
    throw ParameterError("mode " + to_string(mode) + " requires a feedback matrix");
  }
  if (fb != nullptr && fb->b.rows() != model.config.d_model) {
    throw DimensionError("feedback matrix " + shape_str(fb->b) + " does not match d_model " +
                         std::to_string(model.config.d_model));
  }
  const CrossEntropyResult sig = next_token_loss(tape.logits, tape.tokens);

  UpdateResult out;
  out.loss = sig.loss;
  if (mode == FeedbackMode::Bp) {
    out.grads = backward_bp(model, tape, sig.error_signal);
    return out;
  }

  const ModelConfig& cfg = model.config;
  Gradients g = zeros_like(model.params);

  // The head slice -- final norm, projector, last block -- is BP in every mode.
  const Matrix e = head_backward(model, tape, sig.error_signal, g);
  const int last = cfg.n_layer - 1;
  BlockBackwardResult last_block = block_backward(
      model.params.blocks[static_cast<std::size_t>(last)],
      tape.blocks[static_cast<std::size_t>(last)], e, cfg, BackwardSwitches{});
  g.blocks[static_cast<std::size_t>(last)] = std::move(last_block.grads);

  switch (mode) {
    case FeedbackMode::Shallow:
      // Everything below the head slice, embeddings included, stays zero.
      break;

    case FeedbackMode::DfaBlockwise: {
      const Matrix be = project_error(*fb, e);
      const BackwardSwitches sw{cfg.residual_backward, cfg.backward_derivative};
      Matrix first_block_feedback;
      if (last == 0) {
        first_block_feedback = std::move(last_block.input_feedback);
      } else {
        for_each_block(last, parallel_blocks, [&](int l) {
          BlockBackwardResult r =
              block_backward(model.params.blocks[static_cast<std::size_t>(l)],
                             tape.blocks[static_cast<std::size_t>(l)], be, cfg, sw);
          g.blocks[static_cast<std::size_t>(l)] = std::move(r.grads);
          if (l == 0) first_block_feedback = std::move(r.input_feedback);
        });
      }
      embedding_backward(tape.tokens, first_block_feedback, g);
      break;
    }

    case FeedbackMode::DfaCanonical: {
      // Raw B e at every weight; no within-block propagation, true relu'
      // at the single ReLU site, f' = 1 at the purely linear sites.
      // Non-final layer norms have no canonical update rule and stay frozen.
      for_each_block(last, parallel_blocks, [&](int l) {
        const BlockTape& bt = tape.blocks[static_cast<std::size_t>(l)];
        BlockParams& bg = g.blocks[static_cast<std::size_t>(l)];
        const Matrix att_out = bt.x2 - bt.input;       // pre-activation of wo's site
        const Matrix mlp_out = bt.output - bt.x2;      // pre-activation of w2's site
        bg.wq = dfa_layer_update(*fb, e, bt.q, bt.n1, DfaDeriv::One);
        bg.wk = dfa_layer_update(*fb, e, bt.k, bt.n1, DfaDeriv::One);
        bg.wv = dfa_layer_update(*fb, e, bt.v, bt.n1, DfaDeriv::One);
        bg.wo = dfa_layer_update(*fb, e, att_out, bt.att_concat, DfaDeriv::One);
        bg.w1 = dfa_layer_update(*fb, e, bt.mlp_pre, bt.n2, DfaDeriv::ReluPrime);
        bg.w2 = dfa_layer_update(*fb, e, mlp_out, bt.mlp_act, DfaDeriv::One);
      });
      embedding_backward(tape.tokens, project_error(*fb, e), g);
      break;
    }

    case FeedbackMode::Bp:
      break;  // handled above
  }
  out.grads = std::move(g);
  return out;
}

}  // namespace dfalab
