#include "dfalab/optim.hpp"

#include <cmath>
#include <vector>

#include "dfalab/errors.hpp"

namespace dfalab {

AdamState make_adam_state(const Params& params) {
  AdamState state;
  state.m = zeros_like(params);
  state.v = zeros_like(params);
  return state;
}

double global_grad_norm(const Gradients& grads) {
  double sum_sq = 0.0;
  grads.for_each([&](const std::string&, const Matrix& g) { sum_sq += g.squaredNorm(); });
  return std::sqrt(sum_sq);
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    grads.for_each([&](const std::string&, Matrix& g) { g *= scale; });
  }
  return norm;
}

void apply_updates(Model& model, Gradients& grads, AdamState& state, const OptimHyper& hyper) {
  grads.for_each([&](const std::string& name, const Matrix& g) {
    if (!all_finite(g)) throw NumericError("non-finite gradient in " + name);
  });
  clip_global_norm(grads, hyper.clip_norm);

  state.step += 1;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));

  std::vector<Matrix*> params, ms, vs;
  std::vector<const Matrix*> gs;
  model.params.for_each([&](const std::string&, Matrix& t) { params.push_back(&t); });
  state.m.for_each([&](const std::string&, Matrix& t) { ms.push_back(&t); });
  state.v.for_each([&](const std::string&, Matrix& t) { vs.push_back(&t); });
  grads.for_each([&](const std::string&, const Matrix& t) { gs.push_back(&t); });
  if (params.size() != gs.size() || ms.size() != gs.size() || vs.size() != gs.size()) {
    throw ConsistencyError("gradient/parameter/moment tensor counts disagree");
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& theta = *params[i];
    Matrix& m = *ms[i];
    Matrix& v = *vs[i];
    const Matrix& g = *gs[i];
    if (theta.rows() != g.rows() || theta.cols() != g.cols()) {
      throw DimensionError("gradient " + shape_str(g) + " does not match parameter " +
                           shape_str(theta));
    }
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
    v = hyper.beta2 * v.array() + (1.0 - hyper.beta2) * g.array().square();
    // Decoupled weight decay: theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
    theta.array() -= hyper.lr * ((m.array() / bc1) / ((v.array() / bc2).sqrt() + hyper.eps) +
                                 hyper.weight_decay * theta.array());
  }
}

}  // namespace dfalab
