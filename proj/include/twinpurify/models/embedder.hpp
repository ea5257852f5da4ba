#pragma once

// Uniform handle over every embedding model, plus checkpoint persistence.

#include <filesystem>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "twinpurify/models/autoencoder.hpp"
#include "twinpurify/models/pca.hpp"
#include "twinpurify/models/twinpurify.hpp"
#include "twinpurify/nn/checkpoint.hpp"

namespace twinpurify::models {

enum class ModelKind { TwinPurify, BTNoise, AE, VAE, PCA };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::TwinPurify: return "TP";
    case ModelKind::BTNoise: return "BTNoise";
    case ModelKind::AE: return "AE";
    case ModelKind::VAE: return "VAE";
    case ModelKind::PCA: return "PCA";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  for (auto k : {ModelKind::TwinPurify, ModelKind::BTNoise, ModelKind::AE, ModelKind::VAE, ModelKind::PCA})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown model kind '" + s + "' (expected TP, BTNoise, AE, VAE or PCA)");
}

using EmbeddingModel = std::variant<TwinPurifyModel, AutoencoderModel, PcaModel>;

inline ModelKind kind_of(const EmbeddingModel& m) {
  if (auto* tp = std::get_if<TwinPurifyModel>(&m))
    return tp->views == ViewKind::NormalMixture ? ModelKind::TwinPurify : ModelKind::BTNoise;
  if (auto* ae = std::get_if<AutoencoderModel>(&m))
    return ae->variant == AutoencoderVariant::AE ? ModelKind::AE : ModelKind::VAE;
  return ModelKind::PCA;
}

inline const std::vector<std::string>& genes_of(const EmbeddingModel& m) {
  return std::visit([](const auto& x) -> const std::vector<std::string>& { return x.genes; }, m);
}

inline Matrix embed(const EmbeddingModel& m, const Matrix& raw) {
  return std::visit([&](const auto& x) { return x.embed(raw); }, m);
}

inline Matrix embed(const EmbeddingModel& m, const ExpressionMatrix& data) {
  if (data.genes != genes_of(m))
    throw ValidationError("gene-order mismatch: matrix genes do not match the model's training genes");
  return embed(m, data.values);
}

// --- checkpoint persistence -------------------------------------------------

namespace detail {

inline std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "\n" : "") + v[i];
  return out;
}

inline std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

inline std::vector<std::uint64_t> to_u64(const std::vector<std::size_t>& v) {
  return {v.begin(), v.end()};
}
inline std::vector<std::size_t> to_size(const std::vector<std::uint64_t>& v) {
  return {v.begin(), v.end()};
}

inline void store_config(nn::Checkpoint& ck, const TrainConfig& c) {
  ck.put_u64("config.encoder_hidden", to_u64(c.encoder_hidden));
  ck.put_u64("config.projector_hidden", to_u64(c.projector_hidden));
  ck.put_u64("config.sizes", {c.embedding_dim, c.projector_dim, c.epochs, c.batch_size,
                              c.per_gene_scaling ? 1u : 0u, c.seed});
  ck.put_doubles("config.real", std::vector<double>{c.adam.learning_rate, c.adam.beta1, c.adam.beta2,
                                                    c.adam.epsilon, c.max_skip_fraction});
}

inline TrainConfig restore_config(const nn::Checkpoint& ck) {
  TrainConfig c;
  c.encoder_hidden = to_size(ck.u64("config.encoder_hidden"));
  c.projector_hidden = to_size(ck.u64("config.projector_hidden"));
  const auto& s = ck.u64("config.sizes");
  const auto& r = ck.doubles("config.real");
  require(s.size() == 6 && r.size() == 5, "checkpoint: malformed config record");
  c.embedding_dim = s[0];
  c.projector_dim = s[1];
  c.epochs = s[2];
  c.batch_size = s[3];
  c.per_gene_scaling = s[4] != 0;
  c.seed = s[5];
  c.adam = {r[0], r[1], r[2], r[3]};
  c.max_skip_fraction = r[4];
  return c;
}

inline void store_vector(nn::Checkpoint& ck, const std::string& key, const Eigen::VectorXd& v) {
  ck.put_doubles(key, nn::as_span(v));
}
inline Eigen::VectorXd restore_vector(const nn::Checkpoint& ck, const std::string& key) {
  const auto& v = ck.doubles(key);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// Optional training state persisted alongside a model.
struct TrainingState {
  nn::AdamState optimizer;
  std::vector<double> loss_trace;
  std::size_t epochs_completed = 0;
  std::size_t skipped_batches = 0;
  std::size_t total_batches = 0;
};

inline nn::Checkpoint to_checkpoint(const EmbeddingModel& model, const TrainingState* state = nullptr) {
  nn::Checkpoint ck;
  ck.put_text("kind", to_string(kind_of(model)));
  ck.put_text("genes", detail::join_lines(genes_of(model)));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PcaModel>) {
          detail::store_vector(ck, "pca.mean", m.mean);
          ck.put_u64("pca.shape", {static_cast<std::uint64_t>(m.components.rows()),
                                   static_cast<std::uint64_t>(m.components.cols())});
          ck.put_doubles("pca.components", nn::as_span(m.components));
          detail::store_vector(ck, "pca.explained_variance", m.explained_variance);
        } else {
          m.scaler.store(ck, "scaler");
          detail::store_config(ck, m.config);
          nn::store_mlp(ck, "encoder", m.encoder);
          if constexpr (std::is_same_v<T, TwinPurifyModel>) {
            nn::store_mlp(ck, "projector", m.projector);
            ck.put_doubles("mixture.real", std::vector<double>{m.mixture.alpha});
            ck.put_u64("mixture.sizes", {m.mixture.m_normals, m.mixture.seed,
                                         m.mixture.space == MixSpace::Linear ? 1u : 0u});
            ck.put_doubles("loss", std::vector<double>{m.loss.lambda, m.loss.eps});
            detail::store_vector(ck, "noise_sd", m.noise_sd);
          } else {
            nn::store_mlp(ck, "decoder", m.decoder);
            ck.put_doubles("beta", std::vector<double>{m.beta});
          }
        }
      },
      model);
  if (state) {
    nn::store_adam(ck, "optimizer", state->optimizer);
    ck.put_doubles("loss_trace", state->loss_trace);
    ck.put_u64("progress", {state->epochs_completed, state->skipped_batches, state->total_batches});
    // Stream that drives the next epoch's shuffling and view sampling.
    if (!std::holds_alternative<PcaModel>(model)) {
      const auto seed = std::visit(
          [](const auto& m) -> std::uint64_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, PcaModel>) return 0;
            else return m.config.seed;
          },
          model);
      ck.put_text("rng", nn::serialize_rng(make_stream(seed, 1000 + state->epochs_completed)));
    }
  }
  return ck;
}

inline EmbeddingModel from_checkpoint(const nn::Checkpoint& ck, TrainingState* state = nullptr) {
  const ModelKind kind = parse_model_kind(ck.text("kind"));
  const auto genes = detail::split_lines(ck.text("genes"));
  EmbeddingModel out;
  if (kind == ModelKind::PCA) {
    PcaModel m;
    m.genes = genes;
    m.mean = detail::restore_vector(ck, "pca.mean");
    const auto& shape = ck.u64("pca.shape");
    const auto& comp = ck.doubles("pca.components");
    require(shape.size() == 2 && comp.size() == shape[0] * shape[1], "checkpoint: malformed PCA record");
    m.components = Eigen::Map<const Eigen::MatrixXd>(comp.data(), static_cast<Eigen::Index>(shape[0]),
                                                     static_cast<Eigen::Index>(shape[1]));
    m.explained_variance = detail::restore_vector(ck, "pca.explained_variance");
    out = std::move(m);
  } else if (kind == ModelKind::TwinPurify || kind == ModelKind::BTNoise) {
    TwinPurifyModel m;
    m.views = kind == ModelKind::TwinPurify ? ViewKind::NormalMixture : ViewKind::GaussianNoise;
    m.genes = genes;
    m.scaler = InputScaler::restore(ck, "scaler");
    m.config = detail::restore_config(ck);
    m.encoder = nn::restore_mlp(ck, "encoder");
    m.projector = nn::restore_mlp(ck, "projector");
    const auto& mr = ck.doubles("mixture.real");
    const auto& ms = ck.u64("mixture.sizes");
    require(mr.size() == 1 && ms.size() == 3, "checkpoint: malformed mixture record");
    m.mixture = {mr[0], ms[0], ms[1], ms[2] ? MixSpace::Linear : MixSpace::Log2};
    const auto& loss = ck.doubles("loss");
    require(loss.size() == 2, "checkpoint: malformed loss record");
    m.loss = {loss[0], loss[1]};
    m.noise_sd = detail::restore_vector(ck, "noise_sd");
    out = std::move(m);
  } else {
    AutoencoderModel m;
    m.variant = kind == ModelKind::AE ? AutoencoderVariant::AE : AutoencoderVariant::VAE;
    m.genes = genes;
    m.scaler = InputScaler::restore(ck, "scaler");
    m.config = detail::restore_config(ck);
    m.encoder = nn::restore_mlp(ck, "encoder");
    m.decoder = nn::restore_mlp(ck, "decoder");
    m.beta = ck.doubles("beta").at(0);
    out = std::move(m);
  }
  if (state && ck.contains("optimizer.hyper")) {
    state->optimizer = nn::restore_adam(ck, "optimizer");
    state->loss_trace = ck.doubles("loss_trace");
    const auto& p = ck.u64("progress");
    require(p.size() == 3, "checkpoint: malformed progress record");
    state->epochs_completed = p[0];
    state->skipped_batches = p[1];
    state->total_batches = p[2];
  }
  return out;
}

inline void save_model(const EmbeddingModel& model, const std::filesystem::path& path,
                       const TrainingState* state = nullptr) {
  to_checkpoint(model, state).save(path);
}

inline EmbeddingModel load_model(const std::filesystem::path& path, TrainingState* state = nullptr) {
  return from_checkpoint(nn::Checkpoint::load(path), state);
}

}  // namespace twinpurify::models
