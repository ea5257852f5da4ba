#pragma once

// Signature genes -> Cox risk score -> median split -> KM + log-rank, C-index.

#include <Eigen/Core>

#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/expr_data.hpp"
#include "twinpurify/survival/cox.hpp"
#include "twinpurify/survival/km.hpp"

namespace twinpurify::survival {

struct ModelSignature {
  std::string model;
  std::vector<std::string> genes;  // duplicates are counted once
};

struct SurvivalSummary {
  std::string model;
  std::vector<std::string> genes_used;
  CoxModel cox;
  std::vector<std::string> sample_ids;
  std::vector<double> scores;
  std::vector<RiskGroup> groups;
  KMCurve km_high, km_low;
  LogRankResult log_rank;
  double c_index = 0.0;
};

/// Samples carrying survival fields, as records plus their row indices.
inline std::pair<std::vector<std::size_t>, std::vector<SurvivalRecord>> survival_records(
    const ExpressionMatrix& m) {
  std::vector<std::size_t> rows;
  std::vector<SurvivalRecord> rec;
  for (std::size_t i = 0; i < m.n_samples(); ++i) {
    const auto& s = m.samples[i];
    if (!s.surv_time) continue;
    rows.push_back(i);
    rec.push_back({*s.surv_time, *s.surv_event});
  }
  return {rows, rec};
}

inline SurvivalSummary survival_for_signature(const ModelSignature& sig, const ExpressionMatrix& bulk,
                                              const CoxOptions& opt = {}) {
  std::unordered_set<std::string> present(bulk.genes.begin(), bulk.genes.end());
  std::unordered_set<std::string> seen;
  SurvivalSummary out;
  out.model = sig.model;
  std::size_t missing = 0;
  for (const auto& g : sig.genes) {
    if (!seen.insert(g).second) continue;
    if (present.count(g)) out.genes_used.push_back(g);
    else ++missing;
  }
  if (missing)
    warn(sig.model + ": " + std::to_string(missing) + " signature genes not in the matrix were dropped");
  require(!out.genes_used.empty(), sig.model + ": no signature genes present in the matrix");

  const auto [rows, records] = survival_records(bulk);
  require(rows.size() >= 2, "survival pipeline: fewer than two samples with survival data");
  const ExpressionMatrix sub = bulk.select_rows(rows).select_genes(out.genes_used);
  for (auto r : rows) out.sample_ids.push_back(bulk.samples[r].sample_id);

  out.cox = fit_cox(sub.values, records, out.genes_used, opt);
  const Eigen::VectorXd s = risk_scores(out.cox, sub.values);
  out.scores.assign(s.data(), s.data() + s.size());
  out.groups = median_split(out.scores);
  std::vector<SurvivalRecord> high, low;
  for (std::size_t i = 0; i < records.size(); ++i)
    (out.groups[i] == RiskGroup::High ? high : low).push_back(records[i]);
  if (!high.empty()) out.km_high = km_curve(high);
  if (!low.empty()) out.km_low = km_curve(low);
  if (!high.empty() && !low.empty()) {
    out.log_rank = log_rank_test(high, low);
  } else {
    warn(sig.model + ": single risk group, log-rank test skipped");
  }
  out.c_index = c_index(out.scores, records);
  return out;
}

inline std::vector<SurvivalSummary> survival_pipeline(const std::vector<ModelSignature>& signatures,
                                                      const ExpressionMatrix& bulk,
                                                      const CoxOptions& opt = {}) {
  std::vector<SurvivalSummary> out;
  for (const auto& sig : signatures) out.push_back(survival_for_signature(sig, bulk, opt));
  return out;
}

}  // namespace twinpurify::survival
