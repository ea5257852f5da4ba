#pragma once

// Cox proportional hazards with Breslow ties, fitted by Newton-Raphson with
// step halving on standardized features.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/survival/km.hpp"

namespace twinpurify::survival {

struct CoxOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;      // gradient norm, standardized scale
  double max_abs_beta = 50.0;   // standardized scale
  /// Optional ridge penalty 0.5 * ridge * |beta|^2 on the standardized scale;
  /// 0 fits the plain partial likelihood.
  double ridge = 0.0;
};

struct CoxModel {
  std::vector<std::string> features;  // names in fit order, may be empty
  Eigen::VectorXd beta;               // original feature scale; 0 for excluded features
  Eigen::VectorXd beta_standardized;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::vector<bool> excluded;  // zero-variance features
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double log_likelihood = 0.0;  // includes the ridge term when one is set
  bool converged = false;
  std::string tie_method = "breslow";
};

struct PartialLikelihood {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd information;  // negative Hessian
};

/// Breslow partial log-likelihood of beta on design x (rows = subjects).
inline PartialLikelihood cox_partial_likelihood(const Eigen::MatrixXd& x,
                                                const std::vector<SurvivalRecord>& records,
                                                const Eigen::VectorXd& beta, bool derivatives = true) {
  const Eigen::Index n = x.rows(), p = x.cols();
  const Eigen::VectorXd eta = x * beta;
  const double shift = n > 0 ? eta.maxCoeff() : 0.0;
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].time > records[b].time; });
  PartialLikelihood out;
  if (derivatives) {
    out.gradient = Eigen::VectorXd::Zero(p);
    out.information = Eigen::MatrixXd::Zero(p, p);
  }
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < order.size();) {
    const double t = records[order[i]].time;
    std::size_t j = i;
    for (; j < order.size() && records[order[j]].time == t; ++j) {
      const auto r = static_cast<Eigen::Index>(order[j]);
      const double w = std::exp(eta[r] - shift);
      s0 += w;
      if (derivatives) {
        s1 += w * x.row(r).transpose();
        s2.noalias() += w * x.row(r).transpose() * x.row(r);
      }
    }
    for (std::size_t k = i; k < j; ++k) {
      if (!records[order[k]].event) continue;
      const auto r = static_cast<Eigen::Index>(order[k]);
      out.value += eta[r] - shift - std::log(s0);
      if (derivatives) {
        const Eigen::VectorXd xbar = s1 / s0;
        out.gradient += x.row(r).transpose() - xbar;
        out.information += s2 / s0 - xbar * xbar.transpose();
      }
    }
    i = j;
  }
  return out;
}

/// Zero-variance columns are excluded with a warning; remaining columns are
/// standardized, fitted, and mapped back to the original scale.
inline CoxModel fit_cox(const Eigen::MatrixXd& x, const std::vector<SurvivalRecord>& records,
                        std::vector<std::string> names = {}, const CoxOptions& opt = {}) {
  require(x.rows() == static_cast<Eigen::Index>(records.size()), "fit_cox: rows and records differ");
  require(names.empty() || names.size() == static_cast<std::size_t>(x.cols()),
          "fit_cox: one name per feature required");
  require(x.allFinite(), "fit_cox: non-finite feature values");
  validate_records(records);
  const auto events = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.event; });
  require(events >= 2, "fit_cox: at least two events required");

  CoxModel m;
  m.features = std::move(names);
  const Eigen::Index n = x.rows(), p = x.cols();
  m.mean = x.colwise().mean().transpose();
  m.scale.resize(p);
  m.excluded.assign(static_cast<std::size_t>(p), false);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < p; ++j) {
    m.scale[j] = std::sqrt((x.col(j).array() - m.mean[j]).square().sum() / static_cast<double>(std::max<Eigen::Index>(n - 1, 1)));
    if (m.scale[j] > 1e-12) {
      keep.push_back(j);
    } else {
      m.excluded[static_cast<std::size_t>(j)] = true;
      m.scale[j] = 1.0;
      warn("fit_cox: excluding zero-variance feature " +
           (m.features.empty() ? std::to_string(j) : m.features[static_cast<std::size_t>(j)]));
    }
  }
  require(!keep.empty(), "fit_cox: no features with non-zero variance");
  const auto q = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd z(n, q);
  for (Eigen::Index c = 0; c < q; ++c)
    z.col(c) = (x.col(keep[static_cast<std::size_t>(c)]).array() - m.mean[keep[static_cast<std::size_t>(c)]]) /
               m.scale[keep[static_cast<std::size_t>(c)]];

  auto objective = [&](const Eigen::VectorXd& beta) {
    auto pl = cox_partial_likelihood(z, records, beta);
    if (opt.ridge > 0.0) {
      pl.value -= 0.5 * opt.ridge * beta.squaredNorm();
      pl.gradient -= opt.ridge * beta;
      pl.information.diagonal().array() += opt.ridge;
    }
    return pl;
  };
  require(opt.ridge >= 0.0, "fit_cox: ridge must be non-negative");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
  auto cur = objective(b);
  std::size_t it = 0;
  for (; it < opt.max_iterations && cur.gradient.norm() >= opt.tolerance; ++it) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.information);
    Eigen::VectorXd step = ldlt.solve(cur.gradient);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = cur.gradient;
    bool improved = false;
    for (int h = 0; h < 40; ++h) {
      const Eigen::VectorXd trial = b + step;
      if (trial.cwiseAbs().maxCoeff() > opt.max_abs_beta)
        throw NumericalError("fit_cox: monotone likelihood, coefficients diverge past |beta| > " +
                             std::to_string(opt.max_abs_beta));
      auto next = objective(trial);
      if (std::isfinite(next.value) && next.value >= cur.value) {
        b = trial;
        cur = std::move(next);
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  m.iterations = it;
  m.gradient_norm = cur.gradient.norm();
  m.log_likelihood = cur.value;
  m.converged = m.gradient_norm < opt.tolerance;
  if (!m.converged)
    warn("fit_cox: stopped after " + std::to_string(it) + " iterations with gradient norm " +
         std::to_string(m.gradient_norm));
  m.beta_standardized = Eigen::VectorXd::Zero(p);
  m.beta = Eigen::VectorXd::Zero(p);
  for (Eigen::Index c = 0; c < q; ++c) {
    const auto j = keep[static_cast<std::size_t>(c)];
    m.beta_standardized[j] = b[c];
    m.beta[j] = b[c] / m.scale[j];
  }
  return m;
}

/// Linear predictor (x - mean) beta, on the original feature scale.
inline Eigen::VectorXd risk_scores(const CoxModel& m, const Eigen::MatrixXd& x) {
  require(x.cols() == m.beta.size(), "risk_scores: feature count mismatch");
  return (x.rowwise() - m.mean.transpose()) * m.beta;
}

}  // namespace twinpurify::survival
