#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfalab/rng.hpp"
#include "dfalab/tensor.hpp"

namespace dfalab {

enum class Activation { Relu };
enum class BackwardDerivative { Relu, Tanh };
enum class ResidualBackward { Symmetric, Asymmetric };

/// Variance floor inside layer normalization.
inline constexpr double kLayerNormEps = 1e-5;

struct ModelConfig {
  int n_layer = 0;
  int d_model = 0;
  int n_head = 0;
  int d_ff = 0;
  int vocab_size = 0;
  int context = 0;
  Activation forward_activation = Activation::Relu;
  BackwardDerivative backward_derivative = BackwardDerivative::Relu;
  ResidualBackward residual_backward = ResidualBackward::Symmetric;

  int head_dim() const { return d_model / n_head; }

  /// Throws ParameterError unless every extent is positive, n_head divides
  /// d_model, vocab_size >= 2 and context >= 1.
  void validate() const;
};

/// One pre-layer-norm decoder block: norm -> attention -> residual add ->
/// norm -> MLP -> residual add. Layer-norm gains/biases are 1 x d_model.
struct BlockParams {
  Matrix ln1_g, ln1_b;
  Matrix wq, wk, wv, wo;       // d_model x d_model
  Matrix ln2_g, ln2_b;
  Matrix w1;                   // d_model x d_ff
  Matrix w2;                   // d_ff x d_model
};

/// Full parameter set. Doubles as gradient / optimizer-moment storage since
/// those mirror the parameter shapes exactly.
struct Params {
  Matrix tok_emb;              // vocab_size x d_model
  Matrix pos_emb;              // context x d_model
  std::vector<BlockParams> blocks;
  Matrix lnf_g, lnf_b;         // final layer norm, 1 x d_model
  Matrix w_proj;               // d_model x vocab_size

  std::int64_t param_count() const;

  /// Visits every tensor in a fixed order with its stable name
  /// ("tok_emb", "block0.wq", ..., "w_proj"). The order is the canonical
  /// serialization order for checkpoints, clipping and the optimizer.
  template <typename F>
  void for_each(F&& f) {
    f("tok_emb", tok_emb);
    f("pos_emb", pos_emb);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const std::string p = "block" + std::to_string(i) + ".";
      BlockParams& b = blocks[i];
      f(p + "ln1_g", b.ln1_g);
      f(p + "ln1_b", b.ln1_b);
      f(p + "wq", b.wq);
      f(p + "wk", b.wk);
      f(p + "wv", b.wv);
      f(p + "wo", b.wo);
      f(p + "ln2_g", b.ln2_g);
      f(p + "ln2_b", b.ln2_b);
      f(p + "w1", b.w1);
      f(p + "w2", b.w2);
    }
    f("lnf_g", lnf_g);
    f("lnf_b", lnf_b);
    f("w_proj", w_proj);
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<Params*>(this)->for_each(
        [&](const std::string& name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }
};

using Gradients = Params;

Params zeros_like(const Params& other);

/// Order-sensitive hash over every tensor's name and raw bytes; equal
/// hashes are the working definition of "bitwise-identical parameters".
std::uint64_t hash_params(const Params& params);

struct Model {
  ModelConfig config;
  Params params;
};

struct LayerNormCache {
  Matrix xhat;                 // normalized input, rows x d
  Vector inv_std;              // per-row 1/sqrt(var + eps)
};

struct BlockTape {
  Matrix input;                // T x d_model
  LayerNormCache ln1;
  Matrix n1;                   // post-norm input to attention
  Matrix q, k, v;              // attention pre-activations, T x d_model
  std::vector<Matrix> att;     // per-head causal softmax probabilities, T x T
  Matrix att_concat;           // concatenated head outputs, T x d_model
  Matrix x2;                   // input + attention output (first residual)
  LayerNormCache ln2;
  Matrix n2;                   // post-norm input to the MLP
  Matrix mlp_pre;              // a_i: T x d_ff
  Matrix mlp_act;              // h_i: relu(a_i)
  Matrix output;               // x2 + MLP output (second residual)
};

struct ForwardTape {
  std::vector<int> tokens;
  std::vector<BlockTape> blocks;
  Matrix pre_final;            // input to the final layer norm
  LayerNormCache lnf;
  Matrix pre_proj;             // pre-projector hidden states, T x d_model
  Matrix logits;               // T x vocab_size
};

/// All weight matrices sampled N(0, 0.02^2), biases zero, layer-norm gains
/// one. Each tensor draws from its own split of `rng`, keyed by the tensor
/// name, so adding layers does not perturb the other tensors' draws.
Model init_model(const ModelConfig& config, const RngState& rng);

/// Closed-form count matching init_model's tensor shapes.
std::int64_t exact_param_count(const ModelConfig& config);

/// Row-wise layer norm; fills `cache` for the backward pass.
Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias,
                  LayerNormCache& cache);

/// Causal forward pass. Residual additions are always applied here; the
/// asymmetric switches only affect feedback-strategy backwards. The
/// returned tape holds everything any backward needs, logits included.
ForwardTape forward(const Model& model, const std::vector<int>& tokens);

}  // namespace dfalab
