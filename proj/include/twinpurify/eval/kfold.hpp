#pragma once

// Stratified k-fold assignment and the fold-model ensemble.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/eval/logistic.hpp"
#include "twinpurify/eval/metrics.hpp"
#include "twinpurify/random.hpp"

namespace twinpurify::eval {

/// Fold index per sample. Members of each category (in sorted label order)
/// are shuffled and dealt round-robin, with the dealing position carried
/// over between categories so fold sizes stay balanced as well.
inline std::vector<std::size_t> stratified_kfold(const std::vector<std::string>& labels,
                                                 std::size_t k, std::uint64_t seed) {
  require(k >= 2, "stratified_kfold: k must be >= 2");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  Rng rng = make_stream(seed, 0x4B464F4C44);
  std::vector<std::size_t> fold(labels.size());
  std::size_t next = 0;
  for (auto& [label, idx] : members) {
    require(idx.size() >= k, "category '" + label + "' has " + std::to_string(idx.size()) +
                                 " samples, fewer than k=" + std::to_string(k));
    shuffle(std::span(idx), rng);
    for (std::size_t i : idx) fold[i] = next++ % k;
  }
  return fold;
}

/// Stratified holdout inside one training set: round(fraction * size) of
/// each category goes to validation; categories with fewer than two members
/// stay entirely in training.
inline std::vector<bool> stratified_holdout(const std::vector<std::string>& labels, double fraction,
                                            Rng& rng) {
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  std::vector<bool> held(labels.size(), false);
  for (auto& [label, idx] : members) {
    if (idx.size() < 2) continue;
    shuffle(std::span(idx), rng);
    auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, idx.size() - 1);
    for (std::size_t j = 0; j < n_val; ++j) held[idx[j]] = true;
  }
  return held;
}

struct EnsembleOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  /// Candidate l2 strengths in order of preference when validation scores tie.
  std::vector<double> l2_grid{1e-3, 1e-4, 1e-2};
  double validation_fraction = 0.2;
  std::size_t max_iterations = 5000;
};

struct CVEnsemble {
  std::vector<MultinomialLR> models;
  std::vector<std::size_t> fold_of;  // per training sample
  std::vector<double> chosen_l2;
  std::vector<std::string> vocabulary;
  std::uint64_t seed = 0;
};

struct EnsemblePrediction {
  std::vector<std::string> labels;                    // majority vote
  std::vector<std::vector<std::string>> per_model;    // model x sample
  std::vector<Eigen::MatrixXd> probabilities;         // model x (sample x vocabulary)
};

namespace detail {

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

template <class T>
std::vector<T> take(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

/// Probabilities re-indexed onto `vocabulary`; categories the model never
/// saw get probability 0.
inline Eigen::MatrixXd align_proba(const MultinomialLR& m, const Eigen::MatrixXd& x,
                                   const std::vector<std::string>& vocabulary) {
  const Eigen::MatrixXd p = m.predict_proba(x);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p.rows(), static_cast<Eigen::Index>(vocabulary.size()));
  for (std::size_t k = 0; k < m.vocabulary.size(); ++k) {
    const auto it = std::find(vocabulary.begin(), vocabulary.end(), m.vocabulary[k]);
    out.col(it - vocabulary.begin()) = p.col(static_cast<Eigen::Index>(k));
  }
  return out;
}

}  // namespace detail

/// One logistic model per fold, each trained on the other k-1 folds. Within
/// that training part a stratified validation holdout selects l2 by macro-F1,
/// and the fold model is the fit on the remaining inner-training samples.
inline CVEnsemble fit_cv_ensemble(const Eigen::MatrixXd& x, const std::vector<std::string>& labels,
                                  const EnsembleOptions& opt = {}) {
  require(static_cast<std::size_t>(x.rows()) == labels.size(), "ensemble: label count mismatch");
  require(!opt.l2_grid.empty(), "ensemble: empty l2 grid");
  CVEnsemble ens;
  ens.seed = opt.seed;
  ens.fold_of = stratified_kfold(labels, opt.folds, opt.seed);
  std::map<std::string, int> vocab;
  for (const auto& l : labels) vocab[l];
  for (const auto& [l, _] : vocab) ens.vocabulary.push_back(l);

  for (std::size_t f = 0; f < opt.folds; ++f) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (ens.fold_of[i] != f) train.push_back(i);
    const auto train_labels = detail::take(labels, train);
    Rng rng = make_stream(opt.seed, 0x56414C00 + f);
    const auto held = stratified_holdout(train_labels, opt.validation_fraction, rng);
    std::vector<std::size_t> inner, val;
    for (std::size_t j = 0; j < train.size(); ++j) (held[j] ? val : inner).push_back(train[j]);
    const Eigen::MatrixXd x_inner = detail::take_rows(x, inner);
    const Eigen::MatrixXd x_val = detail::take_rows(x, val);
    const auto y_inner = detail::take(labels, inner);
    const auto y_val = detail::take(labels, val);

    double best_score = -1.0;
    std::optional<MultinomialLR> best;
    double best_l2 = opt.l2_grid.front();
    for (double l2 : opt.l2_grid) {
      LrOptions lo;
      lo.l2 = l2;
      lo.max_iterations = opt.max_iterations;
      auto m = fit_multinomial_lr(x_inner, y_inner, lo);
      const double score = val.empty() ? 0.0 : macro_f1(y_val, m.predict(x_val), ens.vocabulary);
      if (score > best_score) {
        best_score = score;
        best = std::move(m);
        best_l2 = l2;
      }
    }
    ens.models.push_back(std::move(*best));
    ens.chosen_l2.push_back(best_l2);
  }
  return ens;
}

inline EnsemblePrediction predict_ensemble(const CVEnsemble& ens, const Eigen::MatrixXd& x) {
  EnsemblePrediction out;
  for (const auto& m : ens.models) {
    out.probabilities.push_back(detail::align_proba(m, x, ens.vocabulary));
    out.per_model.push_back(m.predict(x));
  }
  out.labels = majority_vote(out.per_model, out.probabilities, ens.vocabulary);
  return out;
}

}  // namespace twinpurify::eval
