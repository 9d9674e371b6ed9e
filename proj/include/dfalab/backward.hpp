#pragma once

#include <vector>

#include "dfalab/model.hpp"

namespace dfalab {

/// Per-call backward behaviour. True backpropagation is {Symmetric, Relu};
/// the feedback strategies may flip either switch for non-final blocks.
struct BackwardSwitches {
  ResidualBackward residual = ResidualBackward::Symmetric;
  BackwardDerivative derivative = BackwardDerivative::Relu;
};

/// d/da of the activation used on the way back: the true relu derivative or
/// the deliberately mismatched tanh'(a) = 1 - tanh(a)^2.
Matrix activation_derivative(const Matrix& pre, BackwardDerivative d);

/// Backward through y = gain (.) xhat + bias. Writes parameter gradients and
/// returns d_input. Exact for the biased-variance norm used in the forward.
Matrix layer_norm_backward(const LayerNormCache& cache, const Matrix& gain,
                           const Matrix& d_out, Matrix& d_gain, Matrix& d_bias);

struct BlockBackwardResult {
  BlockParams grads;
  Matrix input_feedback;  // signal delivered to the block below
};

/// Backward through one decoder block given the feedback arriving at its
/// output. With {Symmetric, Relu} this is the exact gradient; Asymmetric
/// drops both skip connections on the way back (the MLP path feeds the
/// attention path directly) and Tanh swaps the activation derivative.
BlockBackwardResult block_backward(const BlockParams& params, const BlockTape& tape,
                                   const Matrix& feedback, const ModelConfig& config,
                                   BackwardSwitches switches);

/// Backward through the projector and final layer norm only. Fills the
/// w_proj / lnf_g / lnf_b entries of `grads` and returns the loss gradient
/// with respect to the pre-final hidden states (the last block's output).
Matrix head_backward(const Model& model, const ForwardTape& tape,
                     const Matrix& error_signal, Gradients& grads);

/// Scatter-add of d_embedding rows into token / position embedding grads.
void embedding_backward(const std::vector<int>& tokens, const Matrix& d_embedding,
                        Gradients& grads);

/// Full true-gradient backward pass: head, then every block with
/// {Symmetric, Relu}, then the embeddings. If `block_output_feedback` is
/// non-null it receives, per block index, the signal that arrived at that
/// block's output -- the quantity the feedback strategies replace.
Gradients backward_bp(const Model& model, const ForwardTape& tape,
                      const Matrix& error_signal,
                      std::vector<Matrix>* block_output_feedback = nullptr);

}  // namespace dfalab
