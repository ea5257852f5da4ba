#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/expr_data.hpp"
#include "twinpurify/nn/adam.hpp"
#include "twinpurify/nn/checkpoint.hpp"
#include "twinpurify/nn/mlp.hpp"

namespace twinpurify::models {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Affine input map applied before every network: per-gene centering and
/// either one pooled scale or per-gene scales.
struct InputScaler {
  Vector mean;
  Vector inv_scale;

  static InputScaler fit(const Matrix& x, bool per_gene) {
    require(x.rows() >= 2, "input scaler needs at least two samples");
    InputScaler s;
    s.mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - s.mean.transpose();
    if (per_gene) {
      Vector sd = (centered.colwise().squaredNorm() / static_cast<double>(x.rows())).cwiseSqrt().transpose();
      s.inv_scale = sd.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / v : 1.0; });
    } else {
      const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(x.size()));
      s.inv_scale = Vector::Constant(x.cols(), sd > 1e-12 ? 1.0 / sd : 1.0);
    }
    return s;
  }

  Matrix apply(const Matrix& x) const {
    require(x.cols() == mean.size(), "input scaler: width mismatch");
    return (x.rowwise() - mean.transpose()) * inv_scale.asDiagonal();
  }

  void store(nn::Checkpoint& ck, const std::string& prefix) const {
    ck.put_doubles(prefix + ".mean", nn::as_span(mean));
    ck.put_doubles(prefix + ".inv_scale", nn::as_span(inv_scale));
  }
  static InputScaler restore(const nn::Checkpoint& ck, const std::string& prefix) {
    InputScaler s;
    const auto& m = ck.doubles(prefix + ".mean");
    const auto& v = ck.doubles(prefix + ".inv_scale");
    s.mean = Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(m.size()));
    s.inv_scale = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    return s;
  }
};

/// Architecture and optimizer settings shared by the neural models.
struct TrainConfig {
  std::vector<std::size_t> encoder_hidden{512, 128};
  std::size_t embedding_dim = 4;
  std::vector<std::size_t> projector_hidden{64};
  std::size_t projector_dim = 64;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  nn::AdamConfig adam;
  bool per_gene_scaling = false;
  /// Fraction of degenerate (skipped) batches tolerated before failing.
  double max_skip_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    require(embedding_dim >= 1, "embedding_dim must be >= 1");
    require(epochs >= 1, "epochs must be >= 1");
    require(batch_size >= 2, "batch_size must be >= 2");
    require(adam.learning_rate > 0.0, "learning rate must be positive");
    require(max_skip_fraction >= 0.0 && max_skip_fraction <= 1.0,
            "max_skip_fraction must lie in [0,1]");
  }

  nn::MLPSpec encoder_spec(std::size_t n_inputs, std::size_t output_width) const {
    nn::MLPSpec s;
    s.widths.push_back(n_inputs);
    s.widths.insert(s.widths.end(), encoder_hidden.begin(), encoder_hidden.end());
    s.widths.push_back(output_width);
    return s;
  }
  nn::MLPSpec projector_spec() const {
    nn::MLPSpec s;
    s.widths.push_back(embedding_dim);
    s.widths.insert(s.widths.end(), projector_hidden.begin(), projector_hidden.end());
    s.widths.push_back(projector_dim);
    return s;
  }
  /// Mirror of the encoder, latent -> genes.
  nn::MLPSpec decoder_spec(std::size_t n_outputs) const {
    nn::MLPSpec s;
    s.widths.push_back(embedding_dim);
    s.widths.insert(s.widths.end(), encoder_hidden.rbegin(), encoder_hidden.rend());
    s.widths.push_back(n_outputs);
    return s;
  }
};

/// Even partition of `order` into ceil(n / batch_size) contiguous batches.
inline std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                          std::size_t batch_size) {
  const std::size_t n = order.size();
  const std::size_t nb = (n + batch_size - 1) / batch_size;
  std::vector<std::vector<std::size_t>> batches;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t size = n / nb + (b < n % nb ? 1 : 0);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                         order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return batches;
}

inline void require_gene_order(const std::vector<std::string>& expected, const ExpressionMatrix& m) {
  if (m.genes != expected)
    throw ValidationError("gene-order mismatch: matrix genes do not match the model's training genes");
}

inline std::vector<nn::ParamView> concat(std::vector<nn::ParamView> a, std::vector<nn::ParamView> b) {
  a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
  return a;
}
inline std::vector<nn::ConstParamView> concat(std::vector<nn::ConstParamView> a,
                                              std::vector<nn::ConstParamView> b) {
  a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
  return a;
}

}  // namespace twinpurify::models
