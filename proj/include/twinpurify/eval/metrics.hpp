#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinpurify/error.hpp"

namespace twinpurify::eval {

/// F1 per vocabulary entry; nullopt for categories absent from both truth
/// and prediction.
inline std::vector<std::optional<double>> per_category_f1(const std::vector<std::string>& truth,
                                                          const std::vector<std::string>& pred,
                                                          const std::vector<std::string>& vocabulary) {
  require(truth.size() == pred.size(), "f1: truth and prediction lengths differ");
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < vocabulary.size(); ++k) index.emplace(vocabulary[k], k);
  std::vector<std::size_t> tp(vocabulary.size()), n_true(vocabulary.size()), n_pred(vocabulary.size());
  auto lookup = [&](const std::string& l) {
    auto it = index.find(l);
    require(it != index.end(), "unknown label '" + l + "'");
    return it->second;
  };
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = lookup(truth[i]);
    const auto p = lookup(pred[i]);
    ++n_true[t];
    ++n_pred[p];
    if (t == p) ++tp[t];
  }
  std::vector<std::optional<double>> out(vocabulary.size());
  for (std::size_t k = 0; k < vocabulary.size(); ++k) {
    if (n_true[k] + n_pred[k] == 0) continue;
    out[k] = 2.0 * static_cast<double>(tp[k]) / static_cast<double>(n_true[k] + n_pred[k]);
  }
  return out;
}

/// Unweighted mean of the per-category F1 over categories that occur in the
/// truth or the prediction.
inline double macro_f1(const std::vector<std::string>& truth, const std::vector<std::string>& pred,
                       const std::vector<std::string>& vocabulary) {
  const auto f1 = per_category_f1(truth, pred, vocabulary);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : f1)
    if (v) {
      sum += *v;
      ++n;
    }
  require(n > 0, "macro_f1: no labels");
  return sum / static_cast<double>(n);
}

/// Per-sample modal label across models. Ties go to the tied label with the
/// highest mean predicted probability, then to the lexicographically first.
/// `probabilities[m]` is samples x vocabulary for model m, or empty to skip
/// the probability rule.
inline std::vector<std::string> majority_vote(const std::vector<std::vector<std::string>>& votes,
                                              const std::vector<Eigen::MatrixXd>& probabilities,
                                              const std::vector<std::string>& vocabulary) {
  require(!votes.empty(), "majority_vote: no models");
  const std::size_t n = votes[0].size();
  for (const auto& v : votes) require(v.size() == n, "majority_vote: prediction lengths differ");
  require(probabilities.empty() || probabilities.size() == votes.size(),
          "majority_vote: one probability matrix per model required");
  for (const auto& p : probabilities)
    require(static_cast<std::size_t>(p.rows()) == n &&
                static_cast<std::size_t>(p.cols()) == vocabulary.size(),
            "majority_vote: probability matrix shape mismatch");

  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::string, std::size_t> count;
    for (const auto& v : votes) ++count[v[i]];
    std::size_t best = 0;
    for (const auto& [label, c] : count) best = std::max(best, c);
    std::vector<std::string> tied;
    for (const auto& [label, c] : count)
      if (c == best) tied.push_back(label);  // std::map keeps these sorted
    if (tied.size() > 1 && !probabilities.empty()) {
      double best_p = -std::numeric_limits<double>::infinity();
      std::string winner;
      for (const auto& label : tied) {
        auto it = std::find(vocabulary.begin(), vocabulary.end(), label);
        require(it != vocabulary.end(), "majority_vote: unknown label '" + label + "'");
        const auto k = static_cast<Eigen::Index>(it - vocabulary.begin());
        double p = 0.0;
        for (const auto& m : probabilities) p += m(static_cast<Eigen::Index>(i), k);
        p /= static_cast<double>(probabilities.size());
        if (p > best_p) {
          best_p = p;
          winner = label;
        }
      }
      out[i] = winner;
    } else {
      out[i] = tied.front();
    }
  }
  return out;
}

}  // namespace twinpurify::eval
