#pragma once

// Twin-view encoder training: shared encoder f and projector g applied to two
// views of each tumor, aligned through the cross-correlation objective.
// Views are tumor/normal admixtures (TwinPurify) or Gaussian-noise copies
// (the BT-noise baseline).

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "twinpurify/augment.hpp"
#include "twinpurify/error.hpp"
#include "twinpurify/expr_data.hpp"
#include "twinpurify/models/barlow.hpp"
#include "twinpurify/models/common.hpp"
#include "twinpurify/nn/adam.hpp"
#include "twinpurify/nn/mlp.hpp"
#include "twinpurify/random.hpp"

namespace twinpurify::models {

enum class ViewKind { NormalMixture, GaussianNoise };

struct TwinPurifyModel {
  ViewKind views = ViewKind::NormalMixture;
  std::vector<std::string> genes;
  InputScaler scaler;
  nn::Mlp encoder;    // f: genes -> embedding
  nn::Mlp projector;  // g: embedding -> projection (training only)
  MixtureSpec mixture;
  LossConfig loss;
  Vector noise_sd;  // per gene, GaussianNoise views only
  TrainConfig config;

  /// Encoder output for raw log2 rows in training gene order.
  Matrix embed(const Matrix& raw) const {
    return encoder.forward(scaler.apply(raw), nullptr, nn::Mode::Eval);
  }
};

/// Encoder embedding of every sample; the projector is not applied.
inline Matrix encode(const TwinPurifyModel& model, const ExpressionMatrix& m) {
  require_gene_order(model.genes, m);
  return model.embed(m.values);
}

/// Loss and parameter gradients for one pair of (scaled) view batches.
struct PairEvaluation {
  PairObjective objective;
  nn::MlpGrad encoder_grad;
  nn::MlpGrad projector_grad;
  nn::ForwardCache enc1, enc2, proj1, proj2;
};

inline PairEvaluation evaluate_pair(const nn::Mlp& encoder, const nn::Mlp& projector,
                                    const Matrix& view1, const Matrix& view2,
                                    const LossConfig& loss, bool with_gradient = true) {
  PairEvaluation ev;
  const Matrix h1 = encoder.forward(view1, &ev.enc1);
  const Matrix h2 = encoder.forward(view2, &ev.enc2);
  const Matrix p1 = projector.forward(h1, &ev.proj1);
  const Matrix p2 = projector.forward(h2, &ev.proj2);
  ev.objective = pair_objective(p1, p2, loss);
  if (!with_gradient || ev.objective.degenerate) return ev;
  ev.encoder_grad = encoder.zero_grad();
  ev.projector_grad = projector.zero_grad();
  const Matrix dh1 = projector.backward(ev.proj1, ev.objective.grad1, ev.projector_grad);
  const Matrix dh2 = projector.backward(ev.proj2, ev.objective.grad2, ev.projector_grad);
  encoder.backward(ev.enc1, dh1, ev.encoder_grad, false);
  encoder.backward(ev.enc2, dh2, ev.encoder_grad, false);
  return ev;
}

struct TrainReport {
  std::vector<double> loss_trace;  // mean batch loss per epoch
  std::size_t skipped_batches = 0;
  std::size_t total_batches = 0;
};

struct TrainedTwinPurify {
  TwinPurifyModel model;
  nn::AdamState optimizer;
  TrainReport report;
  std::size_t epochs_completed = 0;
};

namespace detail {

inline void check_training_inputs(std::size_t n_tumors, const TrainConfig& cfg) {
  cfg.validate();
  if (n_tumors < cfg.batch_size)
    throw ValidationError("batch size " + std::to_string(cfg.batch_size) +
                          " exceeds the number of training tumors (" + std::to_string(n_tumors) + ")");
}

/// Shared epoch loop. `make_pair(row, rng)` returns the two raw views of one
/// tumor row.
template <class ViewFn>
void run_twin_training(TrainedTwinPurify& state, const Matrix& tumors, ViewFn&& make_pair) {
  TwinPurifyModel& model = state.model;
  const TrainConfig& cfg = model.config;
  const auto G = tumors.cols();
  const std::size_t first_epoch = state.epochs_completed;
  for (std::size_t epoch = first_epoch; epoch < first_epoch + cfg.epochs; ++epoch) {
    Rng rng = make_stream(cfg.seed, 1000 + epoch);
    std::vector<std::size_t> order = iota_indices(static_cast<std::size_t>(tumors.rows()));
    shuffle(std::span(order), rng);
    double epoch_loss = 0.0;
    std::size_t used = 0;
    for (const auto& batch : make_batches(order, cfg.batch_size)) {
      Matrix v1(static_cast<Eigen::Index>(batch.size()), G);
      Matrix v2(static_cast<Eigen::Index>(batch.size()), G);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        auto [a, c] = make_pair(tumors.row(static_cast<Eigen::Index>(batch[b])).transpose(), rng);
        v1.row(static_cast<Eigen::Index>(b)) = a.transpose();
        v2.row(static_cast<Eigen::Index>(b)) = c.transpose();
      }
      ++state.report.total_batches;
      auto ev = evaluate_pair(model.encoder, model.projector, model.scaler.apply(v1),
                              model.scaler.apply(v2), model.loss);
      if (ev.objective.degenerate) {
        ++state.report.skipped_batches;
        warn("epoch " + std::to_string(epoch) + ": degenerate batch (constant projector column) skipped");
        continue;
      }
      if (!std::isfinite(ev.objective.loss))
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
      auto params = concat(model.encoder.parameters(), model.projector.parameters());
      auto grads = concat(ev.encoder_grad.views(model.encoder.name),
                          ev.projector_grad.views(model.projector.name));
      nn::adam_step(state.optimizer, params, grads);
      model.encoder.update_running_stats(ev.enc1);
      model.projector.update_running_stats(ev.proj1);
      epoch_loss += ev.objective.loss;
      ++used;
    }
    state.report.loss_trace.push_back(used ? epoch_loss / static_cast<double>(used)
                                           : std::numeric_limits<double>::quiet_NaN());
    ++state.epochs_completed;
  }
  const double skipped = static_cast<double>(state.report.skipped_batches);
  if (skipped > cfg.max_skip_fraction * static_cast<double>(state.report.total_batches))
    throw NumericalError("training skipped " + std::to_string(state.report.skipped_batches) + " of " +
                         std::to_string(state.report.total_batches) + " batches as degenerate");
}

inline TrainedTwinPurify initial_state(const ExpressionMatrix& data, const Matrix& scaler_rows,
                                       const TrainConfig& cfg, const LossConfig& loss) {
  loss.validate();
  TrainedTwinPurify st;
  Rng init = make_stream(cfg.seed, 7);
  st.model.genes = data.genes;
  st.model.scaler = InputScaler::fit(scaler_rows, cfg.per_gene_scaling);
  st.model.encoder = nn::Mlp::initialized(cfg.encoder_spec(data.n_genes(), cfg.embedding_dim), "encoder", init);
  st.model.projector = nn::Mlp::initialized(cfg.projector_spec(), "projector", init);
  st.model.loss = loss;
  st.model.config = cfg;
  st.optimizer.config = cfg.adam;
  return st;
}

inline Matrix stack_rows(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

}  // namespace detail

/// Trains encoder + projector on the tumor rows of `data`, building each view
/// as alpha * tumor + (1 - alpha) * synthetic normal from `normal_pool`.
/// Passing `resume` continues training from that state (fine-tuning).
inline TrainedTwinPurify train_twinpurify(const ExpressionMatrix& data, const Matrix& normal_pool,
                                          const TrainConfig& cfg, const MixtureSpec& mixture,
                                          const LossConfig& loss,
                                          const TrainedTwinPurify* resume = nullptr) {
  const auto tumor_rows = data.tumor_indices();
  detail::check_training_inputs(tumor_rows.size(), cfg);
  mixture.validate(static_cast<std::size_t>(normal_pool.rows()));
  require(normal_pool.cols() == static_cast<Eigen::Index>(data.n_genes()),
          "normal pool width does not match the expression matrix");
  const Matrix tumors = data.select_rows(tumor_rows).values;

  TrainedTwinPurify st;
  if (resume) {
    require(resume->model.genes == data.genes, "gene-order mismatch with the resumed model");
    st = *resume;
    st.model.config = cfg;
    st.model.loss = loss;
  } else {
    st = detail::initial_state(data, detail::stack_rows(tumors, normal_pool), cfg, loss);
  }
  st.model.views = ViewKind::NormalMixture;
  st.model.mixture = mixture;
  detail::run_twin_training(st, tumors, [&](const Vector& x, Rng& rng) {
    return make_views(x, normal_pool, mixture, rng);
  });
  return st;
}

struct NoiseConfig {
  /// Absolute per-gene noise sd; when unset, noise_scale times each gene's
  /// training standard deviation.
  std::optional<double> noise_sd;
  double noise_scale = 0.5;
};

/// Barlow Twins with views x + N(0, sd^2) i.i.d. per gene.
inline TrainedTwinPurify train_bt_noise(const ExpressionMatrix& data, const TrainConfig& cfg,
                                        const NoiseConfig& noise, const LossConfig& loss) {
  if (noise.noise_sd) require(*noise.noise_sd > 0.0, "noise_sd must be positive");
  require(noise.noise_scale > 0.0, "noise_scale must be positive");
  const auto tumor_rows = data.tumor_indices();
  detail::check_training_inputs(tumor_rows.size(), cfg);
  const Matrix tumors = data.select_rows(tumor_rows).values;

  TrainedTwinPurify st = detail::initial_state(data, tumors, cfg, loss);
  st.model.views = ViewKind::GaussianNoise;
  if (noise.noise_sd) {
    st.model.noise_sd = Vector::Constant(tumors.cols(), *noise.noise_sd);
  } else {
    const Matrix centered = tumors.rowwise() - tumors.colwise().mean();
    st.model.noise_sd =
        noise.noise_scale *
        (centered.colwise().squaredNorm() / static_cast<double>(tumors.rows())).cwiseSqrt().transpose();
  }
  const Vector sd = st.model.noise_sd;
  detail::run_twin_training(st, tumors, [&](const Vector& x, Rng& rng) {
    Vector a = x, b = x;
    for (Eigen::Index g = 0; g < x.size(); ++g) a[g] += sd[g] * standard_normal(rng);
    for (Eigen::Index g = 0; g < x.size(); ++g) b[g] += sd[g] * standard_normal(rng);
    return std::pair<Vector, Vector>{std::move(a), std::move(b)};
  });
  return st;
}

}  // namespace twinpurify::models
