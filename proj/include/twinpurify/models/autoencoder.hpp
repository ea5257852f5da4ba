#pragma once

// Reconstruction baselines: a plain autoencoder and a Gaussian VAE sharing
// the encoder architecture of the twin-view models.

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/expr_data.hpp"
#include "twinpurify/models/common.hpp"
#include "twinpurify/nn/adam.hpp"
#include "twinpurify/nn/mlp.hpp"
#include "twinpurify/random.hpp"

namespace twinpurify::models {

enum class AutoencoderVariant { AE, VAE };

struct AutoencoderModel {
  AutoencoderVariant variant = AutoencoderVariant::AE;
  std::vector<std::string> genes;
  InputScaler scaler;
  nn::Mlp encoder;  // AE: genes -> d; VAE: genes -> 2d (mean, log-variance)
  nn::Mlp decoder;  // d -> genes
  double beta = 1.0;
  TrainConfig config;

  /// AE bottleneck, or the VAE posterior mean.
  Matrix embed(const Matrix& raw) const {
    const Matrix h = encoder.forward(scaler.apply(raw), nullptr, nn::Mode::Eval);
    if (variant == AutoencoderVariant::AE) return h;
    return h.leftCols(static_cast<Eigen::Index>(config.embedding_dim));
  }
};

inline Matrix encode(const AutoencoderModel& model, const ExpressionMatrix& m) {
  require_gene_order(model.genes, m);
  return model.embed(m.values);
}

/// KL(N(mu, exp(logvar)) || N(0, I)) per row, summed over latent dimensions.
inline Vector vae_kl(const Matrix& mu, const Matrix& logvar) {
  return (-0.5 * (1.0 + logvar.array() - mu.array().square() - logvar.array().exp())).rowwise().sum();
}

struct TrainedAutoencoder {
  AutoencoderModel model;
  nn::AdamState optimizer;
  std::vector<double> loss_trace;
  std::size_t epochs_completed = 0;
};

struct AutoencoderStep {
  double loss = 0.0;
  nn::MlpGrad encoder_grad, decoder_grad;
};

/// One minibatch objective. AE: mean squared error over batch and genes.
/// VAE: per-sample summed squared error + beta * KL, averaged over the batch;
/// `noise` supplies the reparameterization draws.
inline AutoencoderStep autoencoder_objective(const AutoencoderModel& m, const Matrix& x,
                                             const Matrix* noise, nn::ForwardCache* enc_cache = nullptr) {
  AutoencoderStep step;
  nn::ForwardCache ec_local, dc;
  nn::ForwardCache& ec = enc_cache ? *enc_cache : ec_local;
  const Matrix h = m.encoder.forward(x, &ec);
  const double B = static_cast<double>(x.rows());
  step.encoder_grad = m.encoder.zero_grad();
  step.decoder_grad = m.decoder.zero_grad();
  if (m.variant == AutoencoderVariant::AE) {
    const Matrix recon = m.decoder.forward(h, &dc);
    const Matrix diff = recon - x;
    step.loss = diff.squaredNorm() / static_cast<double>(diff.size());
    const Matrix drecon = (2.0 / static_cast<double>(diff.size())) * diff;
    const Matrix dh = m.decoder.backward(dc, drecon, step.decoder_grad);
    m.encoder.backward(ec, dh, step.encoder_grad, false);
    return step;
  }
  const auto d = static_cast<Eigen::Index>(m.config.embedding_dim);
  const Matrix mu = h.leftCols(d);
  const Matrix logvar = h.rightCols(d);
  const Matrix sd = (0.5 * logvar.array()).exp().matrix();
  require(noise != nullptr && noise->rows() == x.rows() && noise->cols() == d,
          "VAE objective needs one noise draw per latent unit");
  const Matrix z = mu + sd.cwiseProduct(*noise);
  const Matrix recon = m.decoder.forward(z, &dc);
  const Matrix diff = recon - x;
  const Vector kl = vae_kl(mu, logvar);
  step.loss = (diff.squaredNorm() + m.beta * kl.sum()) / B;
  const Matrix dz = m.decoder.backward(dc, (2.0 / B) * diff, step.decoder_grad);
  Matrix dh(h.rows(), h.cols());
  dh.leftCols(d) = dz + (m.beta / B) * mu;
  dh.rightCols(d) = (0.5 * dz.cwiseProduct(*noise).cwiseProduct(sd)) +
                    (m.beta / B) * 0.5 * (logvar.array().exp() - 1.0).matrix();
  m.encoder.backward(ec, dh, step.encoder_grad, false);
  return step;
}

/// Trains on every row of `data` (tumors and adjacent normals) without
/// augmentation.
inline TrainedAutoencoder train_autoencoder(const ExpressionMatrix& data, const TrainConfig& cfg,
                                            AutoencoderVariant variant, double beta = 1.0) {
  cfg.validate();
  require(beta >= 0.0, "VAE beta must be non-negative");
  require(data.n_samples() >= cfg.batch_size,
          "batch size " + std::to_string(cfg.batch_size) + " exceeds the number of training samples");
  TrainedAutoencoder st;
  AutoencoderModel& m = st.model;
  m.variant = variant;
  m.genes = data.genes;
  m.beta = beta;
  m.config = cfg;
  m.scaler = InputScaler::fit(data.values, cfg.per_gene_scaling);
  Rng init = make_stream(cfg.seed, 7);
  const std::size_t enc_out = variant == AutoencoderVariant::VAE ? 2 * cfg.embedding_dim : cfg.embedding_dim;
  m.encoder = nn::Mlp::initialized(cfg.encoder_spec(data.n_genes(), enc_out), "encoder", init);
  m.decoder = nn::Mlp::initialized(cfg.decoder_spec(data.n_genes()), "decoder", init);
  st.optimizer.config = cfg.adam;

  const Matrix x = m.scaler.apply(data.values);
  const auto d = static_cast<Eigen::Index>(cfg.embedding_dim);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = make_stream(cfg.seed, 1000 + epoch);
    std::vector<std::size_t> order = iota_indices(data.n_samples());
    shuffle(std::span(order), rng);
    double total = 0.0;
    std::size_t used = 0;
    for (const auto& batch : make_batches(order, cfg.batch_size)) {
      Matrix xb(static_cast<Eigen::Index>(batch.size()), x.cols());
      for (std::size_t b = 0; b < batch.size(); ++b)
        xb.row(static_cast<Eigen::Index>(b)) = x.row(static_cast<Eigen::Index>(batch[b]));
      Matrix noise;
      if (variant == AutoencoderVariant::VAE) {
        noise.resize(xb.rows(), d);
        for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = standard_normal(rng);
      }
      auto step = autoencoder_objective(m, xb, variant == AutoencoderVariant::VAE ? &noise : nullptr);
      if (!std::isfinite(step.loss))
        throw NumericalError("non-finite autoencoder loss at epoch " + std::to_string(epoch));
      nn::adam_step(st.optimizer, concat(m.encoder.parameters(), m.decoder.parameters()),
                    concat(step.encoder_grad.views(m.encoder.name), step.decoder_grad.views(m.decoder.name)));
      total += step.loss;
      ++used;
    }
    st.loss_trace.push_back(total / static_cast<double>(used));
    ++st.epochs_completed;
  }
  return st;
}

}  // namespace twinpurify::models
