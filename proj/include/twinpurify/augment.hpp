#pragma once

// Structured tumor/normal augmentation: convex mixtures of adjacent-normal
// profiles, tumor/normal mixing, paired views, and dilution series.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/random.hpp"

namespace twinpurify {

/// Space in which mixtures are formed. Inputs are always log2(x+1) values;
/// Linear mixes 2^v - 1 and maps the result back.
enum class MixSpace { Log2, Linear };

struct MixtureSpec {
  double alpha = 0.27;  // tumor fraction of each view
  std::size_t m_normals = 5;
  std::uint64_t seed = 0;
  MixSpace space = MixSpace::Log2;

  void validate(std::size_t pool_size) const {
    require(alpha > 0.0 && alpha <= 1.0, "mixture alpha must lie in (0,1]");
    require(m_normals >= 1, "m_normals must be >= 1");
    require(m_normals <= pool_size, "normal pool has " + std::to_string(pool_size) +
                                        " rows, fewer than m_normals=" + std::to_string(m_normals));
  }
};

struct DilutionSpec {
  std::vector<double> rates;  // 1 - tumor content
  std::uint64_t seed = 0;
  std::size_t m_normals = 5;
  MixSpace space = MixSpace::Log2;

  /// 0.0, 0.1, ..., 1.0
  static DilutionSpec tenths(std::uint64_t seed = 0) {
    DilutionSpec s;
    for (int i = 0; i <= 10; ++i) s.rates.push_back(i / 10.0);
    s.seed = seed;
    return s;
  }

  void validate() const {
    require(!rates.empty(), "dilution rates must be non-empty");
    for (std::size_t i = 0; i < rates.size(); ++i) {
      require(rates[i] >= 0.0 && rates[i] <= 1.0, "dilution rates must lie in [0,1]");
      require(i == 0 || rates[i] > rates[i - 1], "dilution rates must be strictly increasing");
    }
  }
};

/// One synthetic normal profile and how it was drawn.
struct NormalDraw {
  Eigen::VectorXd profile;
  std::vector<std::size_t> rows;
  std::vector<double> weights;  // on the probability simplex
};

namespace detail {
inline Eigen::VectorXd to_space(const Eigen::VectorXd& v, MixSpace s) {
  if (s == MixSpace::Log2) return v;
  return v.unaryExpr([](double x) { return std::exp2(x) - 1.0; });
}
inline Eigen::VectorXd from_space(const Eigen::VectorXd& v, MixSpace s) {
  if (s == MixSpace::Log2) return v;
  return (v.array().max(0.0) + 1.0).log2();
}
}  // namespace detail

/// Uniform point on the (m-1)-simplex: normalized standard exponentials.
inline std::vector<double> simplex_weights(std::size_t m, Rng& rng) {
  std::vector<double> w(m);
  double total = 0.0;
  std::exponential_distribution<double> expo(1.0);
  for (auto& x : w) total += (x = expo(rng));
  for (auto& x : w) x /= total;
  return w;
}

/// Convex combination of m distinct rows of `pool` with flat-Dirichlet weights.
inline NormalDraw synth_normal(const Eigen::Ref<const Eigen::MatrixXd>& pool, std::size_t m,
                               Rng& rng, MixSpace space = MixSpace::Log2) {
  require(m >= 1, "synth_normal: m must be >= 1");
  require(static_cast<std::size_t>(pool.rows()) >= m,
          "synth_normal: pool has " + std::to_string(pool.rows()) + " rows, fewer than m=" +
              std::to_string(m));
  NormalDraw d;
  d.rows = sample_without_replacement(static_cast<std::size_t>(pool.rows()), m, rng);
  d.weights = simplex_weights(m, rng);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(pool.cols());
  for (std::size_t k = 0; k < m; ++k)
    acc += d.weights[k] * detail::to_space(pool.row(static_cast<Eigen::Index>(d.rows[k])).transpose(), space);
  d.profile = detail::from_space(acc, space);
  return d;
}

/// alpha * tumor + (1 - alpha) * normal, componentwise.
inline Eigen::VectorXd mix(const Eigen::Ref<const Eigen::VectorXd>& tumor,
                           const Eigen::Ref<const Eigen::VectorXd>& normal, double alpha,
                           MixSpace space = MixSpace::Log2) {
  require(tumor.size() == normal.size(), "mix: length mismatch (" + std::to_string(tumor.size()) +
                                             " vs " + std::to_string(normal.size()) + ")");
  require(alpha >= 0.0 && alpha <= 1.0, "mix: alpha must lie in [0,1]");
  if (space == MixSpace::Log2) return alpha * tumor + (1.0 - alpha) * normal;
  return detail::from_space(alpha * detail::to_space(tumor, space) +
                                (1.0 - alpha) * detail::to_space(normal, space),
                            space);
}

/// Two views sharing the tumor term, each with an independent normal draw.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> make_views(
    const Eigen::Ref<const Eigen::VectorXd>& x_tumor, const Eigen::Ref<const Eigen::MatrixXd>& pool,
    const MixtureSpec& spec, Rng& rng) {
  spec.validate(static_cast<std::size_t>(pool.rows()));
  const auto n1 = synth_normal(pool, spec.m_normals, rng, spec.space);
  const auto n2 = synth_normal(pool, spec.m_normals, rng, spec.space);
  return {mix(x_tumor, n1.profile, spec.alpha, spec.space),
          mix(x_tumor, n2.profile, spec.alpha, spec.space)};
}

/// One admixture per rate, each with a fresh normal draw:
/// mix(x_tumor, synth_normal(pool), 1 - rate).
inline std::vector<std::pair<double, Eigen::VectorXd>> dilution_series(
    const Eigen::Ref<const Eigen::VectorXd>& x_tumor, const Eigen::Ref<const Eigen::MatrixXd>& pool,
    const DilutionSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<std::pair<double, Eigen::VectorXd>> out;
  out.reserve(spec.rates.size());
  for (double rate : spec.rates) {
    const auto n = synth_normal(pool, spec.m_normals, rng, spec.space);
    if (rate == 0.0) {
      out.emplace_back(rate, x_tumor);
    } else {
      out.emplace_back(rate, mix(x_tumor, n.profile, 1.0 - rate, spec.space));
    }
  }
  return out;
}

inline std::vector<std::pair<double, Eigen::VectorXd>> dilution_series(
    const Eigen::Ref<const Eigen::VectorXd>& x_tumor, const Eigen::Ref<const Eigen::MatrixXd>& pool,
    const DilutionSpec& spec) {
  Rng rng = make_stream(spec.seed, 0);
  return dilution_series(x_tumor, pool, spec, rng);
}

}  // namespace twinpurify
