#include "dfalab/backward.hpp"

#include <cmath>

#include "dfalab/errors.hpp"

namespace dfalab {

Matrix activation_derivative(const Matrix& pre, BackwardDerivative d) {
  switch (d) {
    case BackwardDerivative::Relu:
      return (pre.array() > 0.0).cast<double>();
    case BackwardDerivative::Tanh:
      return 1.0 - pre.array().tanh().square();
  }
  throw ParameterError("unknown backward derivative");
}

Matrix layer_norm_backward(const LayerNormCache& cache, const Matrix& gain,
                           const Matrix& d_out, Matrix& d_gain, Matrix& d_bias) {
  d_gain = (d_out.array() * cache.xhat.array()).colwise().sum().matrix();
  d_bias = d_out.colwise().sum();
  Matrix d_xhat = d_out.array().rowwise() * gain.row(0).array();
  Vector m1 = d_xhat.rowwise().mean();
  Vector m2 = (d_xhat.array() * cache.xhat.array()).rowwise().mean();
  Matrix d_x = d_xhat;
  d_x.colwise() -= m1;
  d_x.array() -= cache.xhat.array().colwise() * m2.array();
  d_x.array().colwise() *= cache.inv_std.array();
  return d_x;
}

namespace {

/// Backward of the row-restricted causal softmax: row i touches only the
/// probabilities in columns [0, i], so the Jacobian is applied per row on
/// that prefix and the strictly-upper triangle stays exactly zero.
Matrix causal_softmax_backward(const Matrix& probs, const Matrix& d_probs) {
  const Eigen::Index t = probs.rows();
  Matrix d_scores = Matrix::Zero(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    auto p = probs.row(i).head(i + 1);
    auto dp = d_probs.row(i).head(i + 1);
    const double inner = (p.array() * dp.array()).sum();
    d_scores.row(i).head(i + 1) = p.array() * (dp.array() - inner);
  }
  return d_scores;
}

}  // namespace

BlockBackwardResult block_backward(const BlockParams& params, const BlockTape& tape,
                                   const Matrix& feedback, const ModelConfig& config,
                                   BackwardSwitches switches) {
  if (feedback.rows() != tape.output.rows() || feedback.cols() != tape.output.cols()) {
    throw DimensionError("block feedback is " + shape_str(feedback) +
                         " but the block output is " + shape_str(tape.output));
  }
  const bool symmetric = switches.residual == ResidualBackward::Symmetric;
  const int dh = config.head_dim();
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  BlockBackwardResult r;
  BlockParams& g = r.grads;

  // MLP branch: output = x2 + relu(n2 w1) w2.
  g.w2 = matmul(tape.mlp_act.transpose().eval(), feedback);
  Matrix d_act = matmul(feedback, params.w2.transpose().eval());
  Matrix d_pre = hadamard(d_act, activation_derivative(tape.mlp_pre, switches.derivative));
  g.w1 = matmul(tape.n2.transpose().eval(), d_pre);
  Matrix d_n2 = matmul(d_pre, params.w1.transpose().eval());
  Matrix d_x2 = layer_norm_backward(tape.ln2, params.ln2_g, d_n2, g.ln2_g, g.ln2_b);
  if (symmetric) d_x2 += feedback;

  // Attention branch: x2 = input + concat_h(P_h V_h) wo.
  g.wo = matmul(tape.att_concat.transpose().eval(), d_x2);
  Matrix d_concat = matmul(d_x2, params.wo.transpose().eval());
  const Eigen::Index t = tape.input.rows();
  Matrix d_q(t, config.d_model), d_k(t, config.d_model), d_v(t, config.d_model);
  for (int h = 0; h < config.n_head; ++h) {
    auto qh = tape.q.middleCols(h * dh, dh);
    auto kh = tape.k.middleCols(h * dh, dh);
    auto vh = tape.v.middleCols(h * dh, dh);
    auto d_oh = d_concat.middleCols(h * dh, dh);
    const Matrix& probs = tape.att[h];
    Matrix d_probs = d_oh * vh.transpose();
    Matrix d_scores = causal_softmax_backward(probs, d_probs);
    d_q.middleCols(h * dh, dh) = d_scores * kh * att_scale;
    d_k.middleCols(h * dh, dh) = d_scores.transpose() * qh * att_scale;
    d_v.middleCols(h * dh, dh) = probs.transpose() * d_oh;
  }
  g.wq = matmul(tape.n1.transpose().eval(), d_q);
  g.wk = matmul(tape.n1.transpose().eval(), d_k);
  g.wv = matmul(tape.n1.transpose().eval(), d_v);
  Matrix d_n1 = matmul(d_q, params.wq.transpose().eval()) +
                matmul(d_k, params.wk.transpose().eval()) +
                matmul(d_v, params.wv.transpose().eval());
  r.input_feedback = layer_norm_backward(tape.ln1, params.ln1_g, d_n1, g.ln1_g, g.ln1_b);
  if (symmetric) r.input_feedback += d_x2;
  return r;
}

Matrix head_backward(const Model& model, const ForwardTape& tape,
                     const Matrix& error_signal, Gradients& grads) {
  if (error_signal.rows() != tape.logits.rows() ||
      error_signal.cols() != tape.logits.cols()) {
    throw DimensionError("error signal is " + shape_str(error_signal) +
                         " but the logits are " + shape_str(tape.logits));
  }
  grads.w_proj = matmul(tape.pre_proj.transpose().eval(), error_signal);
  Matrix d_pre_proj = matmul(error_signal, model.params.w_proj.transpose().eval());
  return layer_norm_backward(tape.lnf, model.params.lnf_g, d_pre_proj, grads.lnf_g,
                             grads.lnf_b);
}

void embedding_backward(const std::vector<int>& tokens, const Matrix& d_embedding,
                        Gradients& grads) {
  if (d_embedding.rows() != static_cast<Eigen::Index>(tokens.size())) {
    throw DimensionError("embedding feedback has " + std::to_string(d_embedding.rows()) +
                         " rows for " + std::to_string(tokens.size()) + " tokens");
  }
  for (Eigen::Index i = 0; i < d_embedding.rows(); ++i) {
    grads.tok_emb.row(tokens[static_cast<std::size_t>(i)]) += d_embedding.row(i);
    grads.pos_emb.row(i) += d_embedding.row(i);
  }
}

Gradients backward_bp(const Model& model, const ForwardTape& tape,
                      const Matrix& error_signal,
                      std::vector<Matrix>* block_output_feedback) {
  Gradients grads = zeros_like(model.params);
  Matrix feedback = head_backward(model, tape, error_signal, grads);
  if (block_output_feedback) {
    block_output_feedback->assign(static_cast<std::size_t>(model.config.n_layer), Matrix());
  }
  const BackwardSwitches true_grad;  // {Symmetric, Relu}
  for (int l = model.config.n_layer - 1; l >= 0; --l) {
    if (block_output_feedback) (*block_output_feedback)[static_cast<std::size_t>(l)] = feedback;
    BlockBackwardResult r = block_backward(model.params.blocks[static_cast<std::size_t>(l)],
                                           tape.blocks[static_cast<std::size_t>(l)], feedback,
                                           model.config, true_grad);
    grads.blocks[static_cast<std::size_t>(l)] = std::move(r.grads);
    feedback = std::move(r.input_feedback);
  }
  embedding_backward(tape.tokens, feedback, grads);
  return grads;
}

}  // namespace dfalab
