#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/expr_data.hpp"

namespace twinpurify::models {

struct PcaModel {
  std::vector<std::string> genes;
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;          // genes x d, orthonormal columns
  Eigen::VectorXd explained_variance;  // eigenvalues of the (n-1) covariance

  Eigen::MatrixXd embed(const Eigen::MatrixXd& raw) const {
    require(raw.cols() == mean.size(), "pca: width mismatch");
    return (raw.rowwise() - mean.transpose()) * components;
  }
};

/// Top-d principal axes of the mean-centered training rows. Each component's
/// largest-magnitude loading is made positive.
inline PcaModel pca_fit(const ExpressionMatrix& train, std::size_t d) {
  const auto n = static_cast<std::size_t>(train.values.rows());
  const auto g = static_cast<std::size_t>(train.values.cols());
  require(d >= 1, "pca: d must be >= 1");
  require(n >= 2 && d <= std::min(n - 1, g),
          "pca: d=" + std::to_string(d) + " exceeds min(n_samples-1, n_genes)");
  PcaModel m;
  m.genes = train.genes;
  m.mean = train.values.colwise().mean().transpose();
  const Eigen::MatrixXd centered = train.values.rowwise() - m.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto k = static_cast<Eigen::Index>(d);
  m.components = svd.matrixV().leftCols(k);
  m.explained_variance = svd.singularValues().head(k).array().square() / static_cast<double>(n - 1);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    m.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (m.components(arg, c) < 0.0) m.components.col(c) *= -1.0;
  }
  return m;
}

inline Eigen::MatrixXd pca_transform(const PcaModel& model, const ExpressionMatrix& m) {
  if (m.genes != model.genes)
    throw ValidationError("gene-order mismatch: matrix genes do not match the PCA training genes");
  return model.embed(m.values);
}

}  // namespace twinpurify::models
