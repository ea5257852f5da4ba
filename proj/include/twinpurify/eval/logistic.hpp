#pragma once

// Multinomial logistic regression: mean softmax cross-entropy plus
// (l2/2)||W||^2, minimized by full-batch gradient descent with
// Barzilai-Borwein step proposals and Armijo backtracking.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinpurify/error.hpp"

namespace twinpurify::eval {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct LrOptions {
  double l2 = 1e-3;
  double tolerance = 1e-6;  // on the Frobenius norm of the full gradient
  std::size_t max_iterations = 5000;
  /// Starting point, (features + 1) x categories with the bias in the last
  /// row, in standardized feature units. Zero when absent.
  std::optional<Matrix> initial;
};

struct MultinomialLR {
  std::vector<std::string> vocabulary;  // sorted
  Vector feature_mean;
  Vector feature_inv_scale;
  Matrix weight;  // features x categories, standardized units
  Vector bias;
  double l2 = 0.0;
  double loss = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;

  Matrix standardize(const Matrix& x) const {
    require(x.cols() == feature_mean.size(), "logistic regression: feature width mismatch");
    return (x.rowwise() - feature_mean.transpose()) * feature_inv_scale.asDiagonal();
  }

  /// Decision scores x W + b in standardized units.
  Matrix scores(const Matrix& x) const {
    return (standardize(x) * weight).rowwise() + bias.transpose();
  }

  Matrix predict_proba(const Matrix& x) const {
    Matrix s = scores(x);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double m = s.row(i).maxCoeff();
      s.row(i) = (s.row(i).array() - m).exp();
      s.row(i) /= s.row(i).sum();
    }
    return s;
  }

  /// Argmax of the probabilities; equal probabilities go to the earlier label.
  std::vector<std::string> predict(const Matrix& x) const {
    const Matrix p = predict_proba(x);
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      Eigen::Index k = 0;
      p.row(i).maxCoeff(&k);
      out.push_back(vocabulary[static_cast<std::size_t>(k)]);
    }
    return out;
  }
};

namespace detail {

struct LrObjective {
  const Matrix& x;  // n x (d + 1), last column ones
  const Matrix& y;  // n x K one-hot
  double l2;

  double value(const Matrix& theta, Matrix* grad) const {
    const double n = static_cast<double>(x.rows());
    const Eigen::Index d = theta.rows() - 1;
    Matrix s = x * theta;
    double ce = 0.0;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double m = s.row(i).maxCoeff();
      s.row(i) = (s.row(i).array() - m).exp();
      const double z = s.row(i).sum();
      s.row(i) /= z;
      Eigen::Index k = 0;
      y.row(i).maxCoeff(&k);
      ce -= std::log(std::max(s(i, k), 1e-300));
    }
    const double reg = 0.5 * l2 * theta.topRows(d).squaredNorm();
    if (grad) {
      *grad = x.transpose() * (s - y) / n;
      grad->topRows(d) += l2 * theta.topRows(d);
    }
    return ce / n + reg;
  }
};

}  // namespace detail

inline MultinomialLR fit_multinomial_lr(const Matrix& x, const std::vector<std::string>& labels,
                                        const LrOptions& opt = {}) {
  require(x.rows() == static_cast<Eigen::Index>(labels.size()),
          "logistic regression: label count does not match rows");
  require(x.allFinite(), "logistic regression: non-finite features");
  require(opt.l2 >= 0.0, "logistic regression: l2 must be >= 0");
  MultinomialLR m;
  m.l2 = opt.l2;
  std::map<std::string, Eigen::Index> index;
  for (const auto& l : labels) index.emplace(l, 0);
  require(index.size() >= 2, "logistic regression needs at least two categories");
  for (auto& [label, k] : index) {
    k = static_cast<Eigen::Index>(m.vocabulary.size());
    m.vocabulary.push_back(label);
  }
  const Eigen::Index n = x.rows(), d = x.cols(), K = static_cast<Eigen::Index>(m.vocabulary.size());

  m.feature_mean = x.colwise().mean().transpose();
  m.feature_inv_scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt((x.col(j).array() - m.feature_mean[j]).square().mean());
    m.feature_inv_scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  Matrix xa(n, d + 1);
  xa.leftCols(d) = m.standardize(x);
  xa.col(d).setOnes();
  Matrix y = Matrix::Zero(n, K);
  for (Eigen::Index i = 0; i < n; ++i) y(i, index.at(labels[static_cast<std::size_t>(i)])) = 1.0;

  const detail::LrObjective f{xa, y, opt.l2};
  Matrix theta = Matrix::Zero(d + 1, K);
  if (opt.initial) {
    require(opt.initial->rows() == d + 1 && opt.initial->cols() == K,
            "logistic regression: initial point has the wrong shape");
    theta = *opt.initial;
  }
  Matrix grad;
  double loss = f.value(theta, &grad);
  Matrix prev_theta, prev_grad;
  double step = 1.0;
  std::size_t it = 0;
  for (; it < opt.max_iterations && grad.norm() >= opt.tolerance; ++it) {
    if (it > 0) {
      const Matrix s = theta - prev_theta;
      const Matrix g = grad - prev_grad;
      const double sy = (s.array() * g.array()).sum();
      const double yy = g.squaredNorm();
      const double ss = s.squaredNorm();
      // Alternate the two Barzilai-Borwein step lengths.
      const double bb = (it % 2) ? ss / sy : sy / yy;
      step = (sy > 0.0 && std::isfinite(bb)) ? bb : 1.0;
    }
    const double g2 = grad.squaredNorm();
    Matrix trial_grad;
    Matrix trial;
    double trial_loss = loss;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial = theta - step * grad;
      trial_loss = f.value(trial, &trial_grad);
      if (std::isfinite(trial_loss) && trial_loss <= loss - 1e-4 * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no representable decrease left
    prev_theta = std::move(theta);
    prev_grad = std::move(grad);
    theta = std::move(trial);
    grad = std::move(trial_grad);
    loss = trial_loss;
  }
  m.weight = theta.topRows(d);
  m.bias = theta.row(d).transpose();
  m.loss = loss;
  m.gradient_norm = grad.norm();
  m.iterations = it;
  m.converged = m.gradient_norm < opt.tolerance;
  if (!m.converged)
    warn("logistic regression stopped after " + std::to_string(it) +
         " iterations with gradient norm " + std::to_string(m.gradient_norm));
  return m;
}

/// Objective value of a fitted model on its own standardized design; used to
/// compare optima reached from different starting points.
inline double lr_objective(const MultinomialLR& m, const Matrix& x,
                           const std::vector<std::string>& labels) {
  const Eigen::Index n = x.rows(), d = x.cols(), K = static_cast<Eigen::Index>(m.vocabulary.size());
  Matrix xa(n, d + 1);
  xa.leftCols(d) = m.standardize(x);
  xa.col(d).setOnes();
  Matrix y = Matrix::Zero(n, K);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto it = std::find(m.vocabulary.begin(), m.vocabulary.end(), labels[static_cast<std::size_t>(i)]);
    require(it != m.vocabulary.end(), "unknown label '" + labels[static_cast<std::size_t>(i)] + "'");
    y(i, it - m.vocabulary.begin()) = 1.0;
  }
  Matrix theta(d + 1, K);
  theta.topRows(d) = m.weight;
  theta.row(d) = m.bias.transpose();
  return detail::LrObjective{xa, y, m.l2}.value(theta, nullptr);
}

}  // namespace twinpurify::eval
