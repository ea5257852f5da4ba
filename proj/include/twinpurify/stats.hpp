#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "twinpurify/error.hpp"

namespace twinpurify::stats {

inline double mean(std::span<const double> v) {
  require(!v.empty(), "mean of empty sequence");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1); 0 for fewer than two values.
inline double sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
  require(!v.empty(), "median of empty sequence");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Pearson correlation; nullopt when either input has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "pearson: need two equal-length sequences");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Upper tail of the chi-square distribution with one degree of freedom,
/// kept strictly positive.
inline double chi2_sf_1df(double x) {
  require(x >= 0.0 && std::isfinite(x), "chi2_sf_1df: statistic must be finite and >= 0");
  return std::max(std::erfc(std::sqrt(x / 2.0)), std::numeric_limits<double>::min());
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov tail, Q(l) = 2 sum (-1)^(k-1) exp(-2 k^2 l^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample Kolmogorov-Smirnov test against U(0,1), with Stephens'
/// small-sample correction of the asymptotic distribution.
inline KsResult ks_uniform(std::vector<double> v) {
  require(!v.empty(), "ks_uniform: empty sample");
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = std::clamp(v[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

}  // namespace twinpurify::stats
