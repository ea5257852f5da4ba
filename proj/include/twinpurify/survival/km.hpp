#pragma once

// Kaplan-Meier curves, the two-group log-rank test, median risk split and
// Harrell's concordance index.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/stats.hpp"

namespace twinpurify::survival {

struct SurvivalRecord {
  double time = 0.0;  // > 0
  bool event = false;
};

inline void validate_records(const std::vector<SurvivalRecord>& r) {
  for (const auto& x : r)
    require(std::isfinite(x.time) && x.time > 0.0, "survival time must be positive and finite");
}

/// Product-limit estimate at every distinct observed time (events and
/// censorings); survival[i] holds S just after times[i].
struct KMCurve {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> events;
  std::vector<std::size_t> censored;

  /// Step-function value at t (1 before the first time).
  double at(double t) const {
    double s = 1.0;
    for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i) s = survival[i];
    return s;
  }
};

inline KMCurve km_curve(const std::vector<SurvivalRecord>& records) {
  require(!records.empty(), "km_curve: no records");
  validate_records(records);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].time < records[b].time; });
  KMCurve c;
  std::size_t n = records.size();
  double s = 1.0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = records[order[i]].time;
    std::size_t d = 0, cens = 0;
    for (; i < order.size() && records[order[i]].time == t; ++i) (records[order[i]].event ? d : cens)++;
    s *= static_cast<double>(n - d) / static_cast<double>(n);
    c.times.push_back(t);
    c.survival.push_back(s);
    c.at_risk.push_back(n);
    c.events.push_back(d);
    c.censored.push_back(cens);
    n -= d + cens;
  }
  return c;
}

struct LogRankResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int df = 1;
  double observed_a = 0.0;
  double expected_a = 0.0;
  double variance = 0.0;
};

inline LogRankResult log_rank_test(const std::vector<SurvivalRecord>& a,
                                   const std::vector<SurvivalRecord>& b) {
  require(!a.empty() && !b.empty(), "log_rank_test: both groups must be non-empty");
  validate_records(a);
  validate_records(b);
  struct Obs {
    double time;
    bool event;
    bool in_a;
  };
  std::vector<Obs> all;
  for (const auto& r : a) all.push_back({r.time, r.event, true});
  for (const auto& r : b) all.push_back({r.time, r.event, false});
  std::sort(all.begin(), all.end(), [](const Obs& x, const Obs& y) { return x.time < y.time; });

  LogRankResult res;
  double n_a = static_cast<double>(a.size()), n = static_cast<double>(all.size());
  std::size_t total_events = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double t = all[i].time;
    double d = 0, d_a = 0, leave = 0, leave_a = 0;
    for (; i < all.size() && all[i].time == t; ++i) {
      leave += 1;
      leave_a += all[i].in_a;
      if (all[i].event) {
        d += 1;
        d_a += all[i].in_a;
      }
    }
    if (d > 0) {
      res.observed_a += d_a;
      res.expected_a += d * n_a / n;
      if (n > 1) res.variance += d * (n_a / n) * (1 - n_a / n) * (n - d) / (n - 1);
      total_events += static_cast<std::size_t>(d);
    }
    n -= leave;
    n_a -= leave_a;
  }
  require(total_events > 0, "log_rank_test: no events in either group");
  const double diff = res.observed_a - res.expected_a;
  res.statistic = res.variance > 0.0 ? diff * diff / res.variance : 0.0;
  res.p_value = stats::chi2_sf_1df(res.statistic);
  return res;
}

enum class RiskGroup { Low, High };

inline std::string to_string(RiskGroup g) { return g == RiskGroup::High ? "High" : "Low"; }

/// Scores above the median are High; at or below it, Low.
inline std::vector<RiskGroup> median_split(const std::vector<double>& scores) {
  require(scores.size() >= 2, "median_split: need at least two scores");
  const double med = stats::median(scores);
  std::vector<RiskGroup> out;
  for (double s : scores) out.push_back(s > med ? RiskGroup::High : RiskGroup::Low);
  if (std::all_of(scores.begin(), scores.end(), [&](double s) { return s == scores.front(); }))
    warn("median_split: all risk scores are identical; every sample is Low");
  return out;
}

/// Harrell's C. A pair (i, j) is admissible when t_i < t_j with an event at
/// i, or t_i == t_j with an event at i only. Higher score means higher risk;
/// equal scores count one half.
inline double c_index(const std::vector<double>& scores, const std::vector<SurvivalRecord>& records) {
  require(scores.size() == records.size(), "c_index: scores and records differ in length");
  double concordant = 0.0;
  std::size_t admissible = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].event) continue;
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (i == j) continue;
      const bool ok = records[i].time < records[j].time ||
                      (records[i].time == records[j].time && !records[j].event);
      if (!ok) continue;
      ++admissible;
      if (scores[i] > scores[j]) concordant += 1.0;
      else if (scores[i] == scores[j]) concordant += 0.5;
    }
  }
  require(admissible > 0, "c_index: no admissible pairs");
  return concordant / static_cast<double>(admissible);
}

}  // namespace twinpurify::survival
