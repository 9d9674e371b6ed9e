#include "dfalab/tensor.hpp"

#include <cmath>
#include <cstring>

#include "dfalab/rng.hpp"

namespace dfalab {

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

CrossEntropyResult softmax_cross_entropy(const Matrix& logits,
                                         const std::vector<int>& targets) {
  const Eigen::Index t = logits.rows();
  const Eigen::Index v = logits.cols();
  if (static_cast<Eigen::Index>(targets.size()) != t) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(t) + " rows of logits");
  }
  if (t == 0) {
    throw LengthError("softmax_cross_entropy: empty logits");
  }
  for (int y : targets) {
    if (y < 0 || y >= v) {
      throw IndexError("softmax_cross_entropy: target " + std::to_string(y) +
                       " out of range [0, " + std::to_string(v) + ")");
    }
  }
  CrossEntropyResult res;
  res.error_signal.resize(t, v);
  double loss_sum = 0.0;
  const double inv_t = 1.0 / static_cast<double>(t);
  for (Eigen::Index i = 0; i < t; ++i) {
    double m = logits.row(i).maxCoeff();
    Eigen::RowVectorXd shifted = logits.row(i).array() - m;
    Eigen::RowVectorXd ex = shifted.array().exp();
    double denom = ex.sum();
    // -log p[target] computed in log space to avoid the exp/log round trip.
    loss_sum += std::log(denom) - shifted(targets[i]);
    res.error_signal.row(i) = ex * (inv_t / denom);
    res.error_signal(i, targets[i]) -= inv_t;
  }
  res.loss = loss_sum * inv_t;
  return res;
}

std::uint64_t hash_matrix(const Matrix& m) {
  return fnv1a(std::string_view(reinterpret_cast<const char*>(m.data()),
                                static_cast<std::size_t>(m.size()) * sizeof(double)));
}

}  // namespace dfalab
