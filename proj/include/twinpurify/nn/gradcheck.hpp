#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "twinpurify/nn/mlp.hpp"
#include "twinpurify/random.hpp"

namespace twinpurify::nn {

struct GradCheckBlock {
  std::string name;
  std::size_t checked = 0;
  double max_abs_error = 0.0;
  /// max |analytic - numeric| divided by the block's gradient magnitude
  /// (max |analytic|, |numeric|), floored at 1e-3 of the largest magnitude
  /// over all blocks so blocks with a vanishing true gradient are not
  /// judged on round-off alone.
  double relative_error = 0.0;
  double scale = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double max_relative_error = 0.0;
};

struct GradCheckOptions {
  double step = 1e-5;
  /// Entries checked per block; 0 checks every entry.
  std::size_t max_entries_per_block = 0;
  std::uint64_t seed = 0;
};

/// Central differences of `loss` against `analytic` (one vector per block,
/// laid out like `params`). `loss` must be a pure function of the parameter
/// values; each entry is perturbed in place and restored.
inline GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                         const std::vector<ParamView>& params,
                                         const std::vector<std::vector<double>>& analytic,
                                         const GradCheckOptions& opt = {}) {
  require(opt.step > 0.0, "finite_diff_check: step must be positive");
  require(params.size() == analytic.size(), "finite_diff_check: block count mismatch");
  Rng rng = make_stream(opt.seed, 0);
  auto checked_loss = [&]() {
    const double v = loss();
    if (!std::isfinite(v)) throw NumericalError("finite_diff_check: non-finite loss");
    return v;
  };
  checked_loss();

  GradCheckReport report;
  for (std::size_t b = 0; b < params.size(); ++b) {
    const auto& p = params[b];
    require(analytic[b].size() == p.values.size(),
            "finite_diff_check: gradient size mismatch in " + p.name);
    std::vector<std::size_t> entries = iota_indices(p.values.size());
    if (opt.max_entries_per_block && entries.size() > opt.max_entries_per_block) {
      entries = sample_without_replacement(entries.size(), opt.max_entries_per_block, rng);
      std::sort(entries.begin(), entries.end());
    }
    GradCheckBlock block{.name = p.name, .checked = entries.size()};
    double scale = 0.0;
    for (std::size_t i : entries) {
      double& x = p.values[i];
      const double saved = x;
      x = saved + opt.step;
      const double up = checked_loss();
      x = saved - opt.step;
      const double down = checked_loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      block.max_abs_error = std::max(block.max_abs_error, std::abs(numeric - analytic[b][i]));
      scale = std::max({scale, std::abs(numeric), std::abs(analytic[b][i])});
    }
    block.scale = scale;
    report.blocks.push_back(block);
  }
  double global = 0.0;
  for (const auto& b : report.blocks) global = std::max(global, b.scale);
  for (auto& b : report.blocks) {
    const double denom = std::max(b.scale, 1e-3 * global);
    b.relative_error = denom > 0.0 ? b.max_abs_error / denom : 0.0;
    report.max_relative_error = std::max(report.max_relative_error, b.relative_error);
  }
  return report;
}

inline std::vector<std::vector<double>> copy_blocks(const std::vector<ConstParamView>& views) {
  std::vector<std::vector<double>> out;
  for (const auto& v : views) out.emplace_back(v.values.begin(), v.values.end());
  return out;
}

}  // namespace twinpurify::nn
