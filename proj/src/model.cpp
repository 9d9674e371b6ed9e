#include "dfalab/model.hpp"

#include <cmath>

#include "dfalab/errors.hpp"

namespace dfalab {

void ModelConfig::validate() const {
  if (n_layer < 1) throw ParameterError("n_layer must be >= 1, got " + std::to_string(n_layer));
  if (d_model < 1) throw ParameterError("d_model must be >= 1, got " + std::to_string(d_model));
  if (n_head < 1) throw ParameterError("n_head must be >= 1, got " + std::to_string(n_head));
  if (d_model % n_head != 0) {
    throw ParameterError("n_head " + std::to_string(n_head) + " must divide d_model " +
                         std::to_string(d_model));
  }
  if (d_ff < 1) throw ParameterError("d_ff must be >= 1, got " + std::to_string(d_ff));
  if (vocab_size < 2) {
    throw ParameterError("vocab_size must be >= 2, got " + std::to_string(vocab_size));
  }
  if (context < 1) throw ParameterError("context must be >= 1, got " + std::to_string(context));
}

std::int64_t Params::param_count() const {
  std::int64_t total = 0;
  for_each([&](const std::string&, const Matrix& m) { total += m.size(); });
  return total;
}

Params zeros_like(const Params& other) {
  Params out = other;
  out.for_each([](const std::string&, Matrix& m) { m.setZero(); });
  return out;
}

std::uint64_t hash_params(const Params& params) {
  std::uint64_t h = 1469598103934665603ULL;
  params.for_each([&](const std::string& name, const Matrix& m) {
    h ^= fnv1a(name);
    h *= 1099511628211ULL;
    h ^= hash_matrix(m);
    h *= 1099511628211ULL;
  });
  return h;
}

std::int64_t exact_param_count(const ModelConfig& c) {
  const std::int64_t dm = c.d_model, dff = c.d_ff, v = c.vocab_size;
  const std::int64_t per_block = 4 * dm * dm + 2 * dm * dff + 4 * dm;
  return v * dm + std::int64_t(c.context) * dm + c.n_layer * per_block + 2 * dm + dm * v;
}

namespace {

constexpr double kInitStd = 0.02;

Matrix ones_row(int d) { return Matrix::Ones(1, d); }
Matrix zeros_row(int d) { return Matrix::Zero(1, d); }

}  // namespace

Model init_model(const ModelConfig& config, const RngState& rng) {
  config.validate();
  Model model;
  model.config = config;
  Params& p = model.params;
  const int dm = config.d_model;

  p.blocks.resize(config.n_layer);
  for (BlockParams& b : p.blocks) {
    b.ln1_g = ones_row(dm);
    b.ln1_b = zeros_row(dm);
    b.ln2_g = ones_row(dm);
    b.ln2_b = zeros_row(dm);
  }
  p.lnf_g = ones_row(dm);
  p.lnf_b = zeros_row(dm);

  auto sample = [&](Matrix& m, const std::string& name, int rows, int cols) {
    RngState stream = rng.split(name);
    m = gaussian(stream, rows, cols, kInitStd);
  };
  sample(p.tok_emb, "tok_emb", config.vocab_size, dm);
  sample(p.pos_emb, "pos_emb", config.context, dm);
  for (int i = 0; i < config.n_layer; ++i) {
    const std::string prefix = "block" + std::to_string(i) + ".";
    BlockParams& b = p.blocks[i];
    sample(b.wq, prefix + "wq", dm, dm);
    sample(b.wk, prefix + "wk", dm, dm);
    sample(b.wv, prefix + "wv", dm, dm);
    sample(b.wo, prefix + "wo", dm, dm);
    sample(b.w1, prefix + "w1", dm, config.d_ff);
    sample(b.w2, prefix + "w2", config.d_ff, dm);
  }
  sample(p.w_proj, "w_proj", dm, config.vocab_size);
  return model;
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias,
                  LayerNormCache& cache) {
  const Eigen::Index d = x.cols();
  Vector mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  Vector var = centered.array().square().rowwise().mean();
  cache.inv_std = (var.array() + kLayerNormEps).rsqrt();
  cache.xhat = centered.array().colwise() * cache.inv_std.array();
  Matrix out = cache.xhat;
  out.array().rowwise() *= gain.row(0).array();
  out.array().rowwise() += bias.row(0).array();
  (void)d;
  return out;
}

namespace {

/// Row-restricted causal softmax: row i is a softmax over columns [0, i];
/// columns above the diagonal stay exactly zero because they are never
/// written, rather than being pushed to zero through large negative logits.
Matrix causal_softmax(const Matrix& scores) {
  const Eigen::Index t = scores.rows();
  Matrix probs = Matrix::Zero(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    auto row = scores.row(i).head(i + 1);
    const double row_max = row.maxCoeff();
    Eigen::RowVectorXd ex = (row.array() - row_max).exp();
    probs.row(i).head(i + 1) = ex / ex.sum();
  }
  return probs;
}

}  // namespace

ForwardTape forward(const Model& model, const std::vector<int>& tokens) {
  const ModelConfig& c = model.config;
  const Params& p = model.params;
  if (tokens.empty()) throw LengthError("forward requires at least one token");
  if (static_cast<int>(tokens.size()) > c.context) {
    throw LengthError("sequence length " + std::to_string(tokens.size()) +
                      " exceeds context " + std::to_string(c.context));
  }
  const int t = static_cast<int>(tokens.size());
  const int dm = c.d_model;
  const int dh = c.head_dim();
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardTape tape;
  tape.tokens = tokens;
  tape.blocks.resize(c.n_layer);

  Matrix x(t, dm);
  for (int i = 0; i < t; ++i) {
    const int tok = tokens[i];
    if (tok < 0 || tok >= c.vocab_size) {
      throw IndexError("token id " + std::to_string(tok) + " outside vocab of size " +
                       std::to_string(c.vocab_size));
    }
    x.row(i) = p.tok_emb.row(tok) + p.pos_emb.row(i);
  }

  for (int l = 0; l < c.n_layer; ++l) {
    const BlockParams& b = p.blocks[l];
    BlockTape& bt = tape.blocks[l];
    bt.input = x;
    bt.n1 = layer_norm(x, b.ln1_g, b.ln1_b, bt.ln1);

    bt.q = matmul(bt.n1, b.wq);
    bt.k = matmul(bt.n1, b.wk);
    bt.v = matmul(bt.n1, b.wv);
    bt.att.resize(c.n_head);
    bt.att_concat.resize(t, dm);
    for (int h = 0; h < c.n_head; ++h) {
      auto qh = bt.q.middleCols(h * dh, dh);
      auto kh = bt.k.middleCols(h * dh, dh);
      auto vh = bt.v.middleCols(h * dh, dh);
      Matrix scores = qh * kh.transpose() * att_scale;
      bt.att[h] = causal_softmax(scores);
      bt.att_concat.middleCols(h * dh, dh) = bt.att[h] * vh;
    }
    bt.x2 = x + matmul(bt.att_concat, b.wo);

    bt.n2 = layer_norm(bt.x2, b.ln2_g, b.ln2_b, bt.ln2);
    bt.mlp_pre = matmul(bt.n2, b.w1);
    bt.mlp_act = bt.mlp_pre.cwiseMax(0.0);
    bt.output = bt.x2 + matmul(bt.mlp_act, b.w2);
    x = bt.output;
  }

  tape.pre_final = x;
  tape.pre_proj = layer_norm(x, p.lnf_g, p.lnf_b, tape.lnf);
  tape.logits = matmul(tape.pre_proj, p.w_proj);
  return tape;
}

}  // namespace dfalab
