#pragma once

// Cross-correlation decorrelation objective over paired projections.
//
//   z  -> column batch-normalization (population variance)
//   C_ij = sum_b z1_bi z2_bj / (||z1_i|| ||z2_j||)
//   L = sum_i (1 - C_ii)^2 + lambda * sum_{i != j} C_ij^2

#include <Eigen/Core>

#include <cmath>
#include <vector>

#include "twinpurify/error.hpp"

namespace twinpurify::models {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct LossConfig {
  double lambda = 54.9;
  /// Variance at or below eps marks a column as degenerate.
  double eps = 1e-9;

  void validate() const {
    require(lambda > 0.0, "loss lambda must be positive");
    require(eps > 0.0 && eps <= 1e-6, "loss eps must lie in (0, 1e-6]");
  }
};

struct BatchNormResult {
  Matrix z;
  Vector inv_std;  // 0 for degenerate columns
  std::vector<bool> degenerate;

  bool any_degenerate() const {
    for (bool d : degenerate)
      if (d) return true;
    return false;
  }
};

/// Zero mean, unit population variance per column. Constant columns (variance
/// <= eps) are zeroed and flagged instead of being divided by ~0.
inline BatchNormResult batch_normalize_columns(const Matrix& Z, double eps = 1e-9) {
  require(Z.rows() >= 2, "batch normalization needs a batch of at least 2");
  BatchNormResult r;
  r.z = Z.rowwise() - Z.colwise().mean();
  r.inv_std = Vector::Zero(Z.cols());
  r.degenerate.assign(static_cast<std::size_t>(Z.cols()), false);
  const double B = static_cast<double>(Z.rows());
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    const double var = r.z.col(j).squaredNorm() / B;
    if (var <= eps) {
      r.z.col(j).setZero();
      r.degenerate[static_cast<std::size_t>(j)] = true;
    } else {
      r.inv_std[j] = 1.0 / std::sqrt(var);
      r.z.col(j) *= r.inv_std[j];
    }
  }
  return r;
}

/// Gradient through batch_normalize_columns; degenerate columns pass zero.
inline Matrix batch_normalize_backward(const BatchNormResult& bn, const Matrix& upstream) {
  Matrix d = upstream;
  const Eigen::RowVectorXd mean_g = d.colwise().mean();
  const Eigen::RowVectorXd mean_gz = d.cwiseProduct(bn.z).colwise().mean();
  d.rowwise() -= mean_g;
  d -= bn.z * mean_gz.asDiagonal();
  return d * bn.inv_std.asDiagonal();
}

struct CrossCorrelation {
  Matrix c;      // d x d
  Matrix unit1;  // columns of z1 scaled to unit norm
  Matrix unit2;
  Vector norm1, norm2;
};

inline CrossCorrelation cross_correlation_full(const Matrix& Z1, const Matrix& Z2) {
  require(Z1.rows() == Z2.rows() && Z1.cols() == Z2.cols(),
          "cross_correlation: views must have matching shapes");
  require(Z1.rows() >= 2, "cross_correlation: batch must have at least 2 rows");
  CrossCorrelation r;
  r.norm1 = Z1.colwise().norm().transpose();
  r.norm2 = Z2.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < Z1.cols(); ++j)
    if (r.norm1[j] == 0.0 || r.norm2[j] == 0.0)
      throw NumericalError("cross_correlation: zero-norm column " + std::to_string(j) +
                           " (degenerate batch)");
  r.unit1 = Z1 * r.norm1.cwiseInverse().asDiagonal();
  r.unit2 = Z2 * r.norm2.cwiseInverse().asDiagonal();
  r.c = r.unit1.transpose() * r.unit2;
  return r;
}

inline Matrix cross_correlation(const Matrix& Z1, const Matrix& Z2) {
  return cross_correlation_full(Z1, Z2).c;
}

/// Gradients of a scalar through C with respect to the two (pre-unit-norm)
/// inputs, given dL/dC.
inline std::pair<Matrix, Matrix> cross_correlation_backward(const CrossCorrelation& cc,
                                                            const Matrix& dC) {
  Matrix du1 = cc.unit2 * dC.transpose();
  Matrix du2 = cc.unit1 * dC;
  // u = v / ||v||  =>  dv = (du - u (u . du)) / ||v||
  auto through_norm = [](Matrix du, const Matrix& u, const Vector& norm) {
    const Eigen::RowVectorXd proj = u.cwiseProduct(du).colwise().sum();
    du -= u * proj.asDiagonal();
    return Matrix(du * norm.cwiseInverse().asDiagonal());
  };
  return {through_norm(std::move(du1), cc.unit1, cc.norm1),
          through_norm(std::move(du2), cc.unit2, cc.norm2)};
}

struct LossValue {
  double value = 0.0;
  Matrix grad;  // dL/dC
};

inline LossValue tp_loss(const Matrix& C, double lambda) {
  require(C.rows() == C.cols(), "tp_loss: cross-correlation matrix must be square");
  LossValue out;
  out.grad = Matrix::Zero(C.rows(), C.cols());
  double on = 0.0;
  double off = 0.0;
  for (Eigen::Index i = 0; i < C.rows(); ++i)
    for (Eigen::Index j = 0; j < C.cols(); ++j) {
      if (i == j) {
        const double r = 1.0 - C(i, i);
        on += r * r;
        out.grad(i, i) = -2.0 * r;
      } else {
        off += C(i, j) * C(i, j);
        out.grad(i, j) = 2.0 * lambda * C(i, j);
      }
    }
  out.value = on + lambda * off;
  return out;
}

/// Full objective on two projection batches, with gradients w.r.t. both.
struct PairObjective {
  double loss = 0.0;
  bool degenerate = false;
  Matrix c;
  Matrix grad1, grad2;
};

inline PairObjective pair_objective(const Matrix& P1, const Matrix& P2, const LossConfig& cfg) {
  PairObjective out;
  const auto bn1 = batch_normalize_columns(P1, cfg.eps);
  const auto bn2 = batch_normalize_columns(P2, cfg.eps);
  if (bn1.any_degenerate() || bn2.any_degenerate()) {
    out.degenerate = true;
    return out;
  }
  const auto cc = cross_correlation_full(bn1.z, bn2.z);
  const auto lv = tp_loss(cc.c, cfg.lambda);
  out.loss = lv.value;
  out.c = cc.c;
  auto [dz1, dz2] = cross_correlation_backward(cc, lv.grad);
  out.grad1 = batch_normalize_backward(bn1, dz1);
  out.grad2 = batch_normalize_backward(bn2, dz2);
  return out;
}

}  // namespace twinpurify::models
