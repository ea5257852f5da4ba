#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "twinpurify/nn/mlp.hpp"

namespace twinpurify::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
};

/// One bias-corrected Adam update. Moment buffers are allocated on the first
/// call and must keep the same block layout afterwards.
inline void adam_step(AdamState& state, const std::vector<ParamView>& params,
                      const std::vector<ConstParamView>& grads) {
  if (params.size() != grads.size())
    throw ValidationError("adam_step: parameter/gradient block count mismatch");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Vector::Zero(static_cast<Eigen::Index>(p.values.size())));
      state.second_moment.push_back(Vector::Zero(static_cast<Eigen::Index>(p.values.size())));
    }
  }
  if (state.first_moment.size() != params.size())
    throw ValidationError("adam_step: optimizer state does not match parameters");
  for (std::size_t b = 0; b < params.size(); ++b)
    if (params[b].values.size() != grads[b].values.size() ||
        static_cast<std::size_t>(state.first_moment[b].size()) != params[b].values.size())
      throw ValidationError("adam_step: shape mismatch in block " + params[b].name);

  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    double* p = params[b].values.data();
    const double* g = grads[b].values.data();
    double* m = state.first_moment[b].data();
    double* v = state.second_moment[b].data();
    for (std::size_t i = 0; i < params[b].values.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      p[i] -= c.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + c.epsilon);
    }
  }
}

}  // namespace twinpurify::nn
