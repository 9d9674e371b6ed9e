#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "dfalab/errors.hpp"

namespace dfalab {

/// Dense numeric currency of the whole system. Double precision: the
/// point of this library is gradient-level verification, and the
/// finite-difference checks need the headroom.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Matrix = Mat<double>;
using Vector = Eigen::VectorXd;

inline std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
  return "(" + std::to_string(rows) + ", " + std::to_string(cols) + ")";
}

template <typename Derived>
std::string shape_str(const Eigen::MatrixBase<Derived>& m) {
  return shape_str(m.rows(), m.cols());
}

/// Matrix product with an inner-dimension check. Eigen's product kernel has
/// a fixed summation order for fixed shapes, so results are run-to-run
/// reproducible.
template <typename A, typename B>
Mat<typename A::Scalar> matmul(const Eigen::MatrixBase<A>& a,
                               const Eigen::MatrixBase<B>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a) +
                         " x " + shape_str(b));
  }
  return a * b;
}

/// Elementwise (Hadamard) product; shapes must match exactly.
template <typename A, typename B>
Mat<typename A::Scalar> hadamard(const Eigen::MatrixBase<A>& a,
                                 const Eigen::MatrixBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("hadamard: shape mismatch, " + shape_str(a) + " vs " +
                         shape_str(b));
  }
  return a.cwiseProduct(b);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Row-wise softmax with max-subtraction. Every row sums to 1.
Matrix softmax_rows(const Matrix& logits);

struct CrossEntropyResult {
  double loss = 0.0;            // mean over positions of -log softmax[target]
  Matrix error_signal;          // (softmax - onehot) / n_positions
};

/// Mean token-level cross entropy and its exact gradient with respect to
/// the logits. Targets are class indices, one per row of `logits`.
CrossEntropyResult softmax_cross_entropy(const Matrix& logits,
                                         const std::vector<int>& targets);

/// FNV-1a over the raw bytes of the matrix payload; used by tests and the
/// harness to assert bitwise immutability.
std::uint64_t hash_matrix(const Matrix& m);

}  // namespace dfalab
