#pragma once

// Synthetic cohorts with planted subtype programs, a shared normal program,
// per-sample purity, and subtype-driven survival.

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twinpurify/expr_data.hpp"
#include "twinpurify/random.hpp"

namespace twinpurify {

struct SynthConfig {
  std::size_t n_genes = 2000;
  std::size_t n_tumor = 300;
  std::size_t n_normal = 60;
  std::size_t n_subtypes = 3;
  /// Genes per program block; shrunk when the blocks would not fit.
  std::size_t block_size = 100;
  /// Fraction of block genes carrying a +-1 loading.
  double block_density = 0.5;
  /// log2 fold change applied to loaded genes.
  double program_strength = 1.5;
  std::array<double, 2> purity_range{0.5, 1.0};
  /// Per-gene Gaussian noise, as a fraction of the gene's baseline level.
  double noise_sd = 0.2;
  /// log2-scale amplitude of structured heterogeneity in normal tissue
  /// (latent composition factors shared by all normal backgrounds).
  double normal_factor_sd = 0.0;
  std::size_t n_normal_factors = 3;
  double normal_factor_density = 0.1;
  /// log hazard per subtype; empty means evenly spaced over [-1.5, 1.5].
  std::vector<double> hazard_weights;
  double base_hazard = 1.0 / 60.0;
  /// Censoring times uniform over [0, max]; nullopt disables censoring.
  std::optional<double> censor_max_time = 120.0;
  std::uint64_t seed = 0;

  std::vector<double> resolved_hazard_weights() const {
    if (!hazard_weights.empty()) return hazard_weights;
    std::vector<double> w(n_subtypes, 0.0);
    for (std::size_t k = 0; k < n_subtypes && n_subtypes > 1; ++k)
      w[k] = -1.5 + 3.0 * static_cast<double>(k) / static_cast<double>(n_subtypes - 1);
    return w;
  }

  void validate() const {
    require(n_subtypes >= 2, "synth: n_subtypes must be >= 2");
    require(n_genes >= n_subtypes,
            "synth: n_genes < n_subtypes, programs cannot be made distinguishable");
    require(n_tumor >= 1 && n_normal >= 1, "synth: need at least one tumor and one normal");
    require(purity_range[0] >= 0.0 && purity_range[1] <= 1.0 && purity_range[0] <= purity_range[1],
            "synth: purity_range must satisfy 0 <= low <= high <= 1");
    require(noise_sd >= 0.0 && normal_factor_sd >= 0.0, "synth: noise levels must be >= 0");
    require(block_density > 0.0 && block_density <= 1.0, "synth: block_density must lie in (0,1]");
    require(base_hazard > 0.0, "synth: base_hazard must be positive");
    require(!censor_max_time || *censor_max_time > 0.0, "synth: censor_max_time must be positive");
    require(hazard_weights.empty() || hazard_weights.size() == n_subtypes,
            "synth: hazard_weights must have one entry per subtype");
  }
};

inline std::vector<std::string> subtype_names(std::size_t n) {
  static const std::array<const char*, 4> pam50{"Basal", "Her2", "LumA", "LumB"};
  std::vector<std::string> out;
  for (std::size_t k = 0; k < n; ++k)
    out.push_back(k < pam50.size() ? pam50[k] : "Subtype" + std::to_string(k + 1));
  return out;
}

/// Generated cohort plus its planted ground truth.
struct SynthCohort {
  ExpressionMatrix matrix;  // log2(x+1) values with metadata
  std::vector<std::string> subtypes;
  std::vector<double> purity;  // per sample; 0 for adjacent normals
  /// Gene indices carrying a nonzero loading, per subtype program.
  std::vector<std::vector<std::size_t>> program_genes;
  std::vector<std::size_t> normal_genes;
  /// Noise-free log2 profiles: one row per subtype program, and the normal.
  Matrix subtype_profiles;
  Vector normal_profile;
};

struct SurvivalSimOptions {
  double base_hazard = 1.0 / 60.0;
  std::optional<double> censor_max_time = 120.0;
};

/// Exponential survival with rate base * exp(w[subtype]) and independent
/// uniform censoring. Adjacent normals are left without survival fields.
inline std::vector<SampleMeta> generate_survival(std::vector<SampleMeta> meta,
                                                 const std::vector<std::string>& subtypes,
                                                 const std::vector<double>& hazard_weights,
                                                 const SurvivalSimOptions& opt,
                                                 std::uint64_t seed) {
  require(subtypes.size() == hazard_weights.size(),
          "generate_survival: one hazard weight per subtype required");
  Rng rng = make_stream(seed, 3);
  for (auto& s : meta) {
    if (s.is_normal()) continue;
    require(s.subtype.has_value(), "generate_survival: sample " + s.sample_id + " has no subtype");
    auto it = std::find(subtypes.begin(), subtypes.end(), *s.subtype);
    require(it != subtypes.end(), "generate_survival: unknown subtype " + *s.subtype);
    const double rate =
        opt.base_hazard * std::exp(hazard_weights[static_cast<std::size_t>(it - subtypes.begin())]);
    const double event_time = std::exponential_distribution<double>(rate)(rng);
    const double censor_time =
        opt.censor_max_time ? uniform01(rng) * *opt.censor_max_time
                            : std::numeric_limits<double>::infinity();
    s.surv_event = event_time <= censor_time;
    s.surv_time = std::min(event_time, censor_time);
  }
  return meta;
}

inline SynthCohort generate_cohort(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t G = cfg.n_genes;
  const std::size_t K = cfg.n_subtypes;
  Rng prog_rng = make_stream(cfg.seed, 1);
  Rng sample_rng = make_stream(cfg.seed, 2);

  SynthCohort out;
  out.subtypes = subtype_names(K);

  // Program layout: K subtype blocks followed by one normal block.
  const std::size_t block = std::max<std::size_t>(1, std::min(cfg.block_size, G / (K + 1)));
  Vector baseline(G);
  for (std::size_t g = 0; g < G; ++g) baseline[g] = std::exp2(4.0 + 6.0 * uniform01(prog_rng));

  auto draw_block = [&](std::size_t start, std::vector<std::size_t>& genes) {
    Vector loading = Vector::Zero(G);
    for (std::size_t g = start; g < std::min(G, start + block); ++g) {
      const bool loaded = g == start || uniform01(prog_rng) < cfg.block_density;
      if (!loaded) continue;
      loading[g] = uniform01(prog_rng) < 0.5 ? -1.0 : 1.0;
      genes.push_back(g);
    }
    return loading;
  };
  std::vector<Vector> program_loading(K);
  out.program_genes.resize(K);
  for (std::size_t k = 0; k < K; ++k) program_loading[k] = draw_block(k * block, out.program_genes[k]);
  Vector normal_loading = Vector::Zero(G);
  if ((K + 1) * block <= G) normal_loading = draw_block(K * block, out.normal_genes);

  Matrix factors = Matrix::Zero(static_cast<Eigen::Index>(cfg.n_normal_factors), G);
  for (Eigen::Index f = 0; f < factors.rows(); ++f)
    for (std::size_t g = 0; g < G; ++g)
      if (uniform01(prog_rng) < cfg.normal_factor_density)
        factors(f, g) = uniform01(prog_rng) < 0.5 ? -1.0 : 1.0;

  auto linear_profile = [&](const Vector& loading) {
    Vector v(G);
    for (std::size_t g = 0; g < G; ++g) v[g] = baseline[g] * std::exp2(cfg.program_strength * loading[g]);
    return v;
  };
  std::vector<Vector> programs;
  for (std::size_t k = 0; k < K; ++k) programs.push_back(linear_profile(program_loading[k]));
  const Vector normal = linear_profile(normal_loading);

  out.subtype_profiles.resize(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(G));
  for (std::size_t k = 0; k < K; ++k)
    out.subtype_profiles.row(static_cast<Eigen::Index>(k)) =
        (programs[k].array() + 1.0).log2().transpose();
  out.normal_profile = (normal.array() + 1.0).log2();

  // Normal background of one sample: the normal program modulated by the
  // composition factors.
  auto normal_background = [&]() {
    if (cfg.normal_factor_sd == 0.0 || factors.rows() == 0) return normal;
    Vector shift = Vector::Zero(G);
    for (Eigen::Index f = 0; f < factors.rows(); ++f)
      shift += cfg.normal_factor_sd * standard_normal(sample_rng) * factors.row(f).transpose();
    return Vector(normal.array() * shift.unaryExpr([](double v) { return std::exp2(v); }).array());
  };
  auto finalize = [&](Vector v) {
    for (std::size_t g = 0; g < G; ++g) {
      if (cfg.noise_sd > 0.0) v[g] += cfg.noise_sd * baseline[g] * standard_normal(sample_rng);
      v[g] = std::log2(std::max(v[g], 0.0) + 1.0);
    }
    return v;
  };

  const std::size_t n = cfg.n_tumor + cfg.n_normal;
  ExpressionMatrix& m = out.matrix;
  m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(G));
  for (std::size_t g = 0; g < G; ++g) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "GENE%05zu", g + 1);
    m.genes.emplace_back(buf);
  }
  out.purity.assign(n, 0.0);
  for (std::size_t i = 0; i < cfg.n_tumor; ++i) {
    const std::size_t k = i % K;
    const double p = cfg.purity_range[0] + (cfg.purity_range[1] - cfg.purity_range[0]) * uniform01(sample_rng);
    out.purity[i] = p;
    const Vector background = normal_background();
    m.values.row(static_cast<Eigen::Index>(i)) = finalize(p * programs[k] + (1.0 - p) * background).transpose();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "T%04zu", i + 1);
    m.samples.push_back(SampleMeta{.sample_id = buf, .kind = SampleKind::Tumor, .subtype = out.subtypes[k]});
  }
  for (std::size_t j = 0; j < cfg.n_normal; ++j) {
    const std::size_t i = cfg.n_tumor + j;
    m.values.row(static_cast<Eigen::Index>(i)) = finalize(normal_background()).transpose();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "N%04zu", j + 1);
    m.samples.push_back(SampleMeta{.sample_id = buf, .kind = SampleKind::AdjacentNormal, .grade = 0});
  }

  // Grade proxy: tertiles of effective program strength (purity) among tumors.
  std::vector<std::size_t> order(cfg.n_tumor);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.purity[a] < out.purity[b]; });
  for (std::size_t r = 0; r < order.size(); ++r)
    m.samples[order[r]].grade = 1 + static_cast<int>(3 * r / order.size());

  m.samples = generate_survival(std::move(m.samples), out.subtypes, cfg.resolved_hazard_weights(),
                                {cfg.base_hazard, cfg.censor_max_time}, cfg.seed);
  m.validate();
  return out;
}

}  // namespace twinpurify
