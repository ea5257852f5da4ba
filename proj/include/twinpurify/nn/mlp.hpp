#pragma once

// Dense multilayer perceptron with explicit reverse-mode gradients.
//
// Rows of every tensor are samples. Layer l computes
//   a = x W + b,  a' = batchnorm(a) (optional),  y = act(a')
// with ReLU on hidden layers and a configurable output activation.

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/random.hpp"

namespace twinpurify::nn {

using Tensor = Eigen::MatrixXd;  // [batch, features], 64-bit
using Vector = Eigen::VectorXd;

enum class Activation { ReLU, Identity };
enum class Mode { Train, Eval };

inline std::string to_string(Activation a) { return a == Activation::ReLU ? "relu" : "identity"; }

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "identity") return Activation::Identity;
  throw ValidationError("unknown activation '" + s + "'");
}

struct MLPSpec {
  std::vector<std::size_t> widths;  // input, hidden..., output
  Activation hidden_activation = Activation::ReLU;
  Activation output_activation = Activation::Identity;
  std::vector<bool> batch_norm;  // one flag per layer; empty = none

  std::size_t n_layers() const { return widths.size() - 1; }
  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  bool has_batch_norm(std::size_t l) const { return l < batch_norm.size() && batch_norm[l]; }
  Activation activation(std::size_t l) const {
    return l + 1 == n_layers() ? output_activation : hidden_activation;
  }

  void validate() const {
    require(widths.size() >= 2, "MLP spec needs at least two widths");
    for (auto w : widths) require(w >= 1, "MLP widths must be >= 1");
    require(batch_norm.empty() || batch_norm.size() == n_layers(),
            "MLP batch_norm flags must match the layer count");
  }
  bool operator==(const MLPSpec&) const = default;
};

inline constexpr double kBatchNormEps = 1e-5;

struct Layer {
  Tensor weight;  // [in, out]
  Vector bias;
  // Batch-norm affine parameters and running statistics (empty when off).
  Vector gamma, beta, running_mean, running_var;
};

struct LayerGrad {
  Tensor weight;
  Vector bias, gamma, beta;
};

struct ParamView {
  std::string name;
  std::span<double> values;
};

struct ConstParamView {
  std::string name;
  std::span<const double> values;
};

template <class Derived>
std::span<double> as_span(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
template <class Derived>
std::span<const double> as_span(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

struct ForwardCache {
  struct Entry {
    Tensor input;
    Tensor pre_activation;  // after batch norm when enabled
    Tensor normalized;      // batch-norm x-hat
    Vector inv_std;
    Vector batch_mean, batch_var;
  };
  std::vector<Entry> layers;
};

struct MlpGrad {
  std::vector<LayerGrad> layers;

  std::vector<ConstParamView> views(const std::string& prefix) const {
    std::vector<ConstParamView> out;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto tag = prefix + ".layer" + std::to_string(l);
      out.push_back({tag + ".weight", as_span(layers[l].weight)});
      out.push_back({tag + ".bias", as_span(layers[l].bias)});
      if (layers[l].gamma.size()) {
        out.push_back({tag + ".gamma", as_span(layers[l].gamma)});
        out.push_back({tag + ".beta", as_span(layers[l].beta)});
      }
    }
    return out;
  }
};

struct Mlp {
  MLPSpec spec;
  std::string name = "mlp";
  std::vector<Layer> layers;

  Mlp() = default;

  /// Zero weights, unit batch-norm scale.
  Mlp(MLPSpec s, std::string n) : spec(std::move(s)), name(std::move(n)) {
    spec.validate();
    for (std::size_t l = 0; l < spec.n_layers(); ++l) {
      const auto in = static_cast<Eigen::Index>(spec.widths[l]);
      const auto out = static_cast<Eigen::Index>(spec.widths[l + 1]);
      Layer layer;
      layer.weight = Tensor::Zero(in, out);
      layer.bias = Vector::Zero(out);
      if (spec.has_batch_norm(l)) {
        layer.gamma = Vector::Ones(out);
        layer.beta = Vector::Zero(out);
        layer.running_mean = Vector::Zero(out);
        layer.running_var = Vector::Ones(out);
      }
      layers.push_back(std::move(layer));
    }
  }

  /// He-normal weights for layers feeding a ReLU, Glorot-style otherwise.
  static Mlp initialized(MLPSpec s, std::string n, Rng& rng) {
    Mlp net(std::move(s), std::move(n));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto& w = net.layers[l].weight;
      const double fan_in = static_cast<double>(w.rows());
      const double gain = net.spec.activation(l) == Activation::ReLU ? 2.0 : 1.0;
      const double sd = std::sqrt(gain / fan_in);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = sd * standard_normal(rng);
    }
    return net;
  }

  std::vector<ParamView> parameters() {
    std::vector<ParamView> out;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto tag = name + ".layer" + std::to_string(l);
      out.push_back({tag + ".weight", as_span(layers[l].weight)});
      out.push_back({tag + ".bias", as_span(layers[l].bias)});
      if (layers[l].gamma.size()) {
        out.push_back({tag + ".gamma", as_span(layers[l].gamma)});
        out.push_back({tag + ".beta", as_span(layers[l].beta)});
      }
    }
    return out;
  }

  MlpGrad zero_grad() const {
    MlpGrad g;
    for (const auto& layer : layers) {
      LayerGrad lg;
      lg.weight = Tensor::Zero(layer.weight.rows(), layer.weight.cols());
      lg.bias = Vector::Zero(layer.bias.size());
      lg.gamma = Vector::Zero(layer.gamma.size());
      lg.beta = Vector::Zero(layer.beta.size());
      g.layers.push_back(std::move(lg));
    }
    return g;
  }

  /// Forward pass. In Train mode batch norm uses batch statistics and the
  /// cache (if given) records everything backward() needs.
  Tensor forward(const Tensor& x, ForwardCache* cache = nullptr, Mode mode = Mode::Train) const {
    if (static_cast<std::size_t>(x.cols()) != spec.input_width())
      throw ValidationError(name + ": input width " + std::to_string(x.cols()) +
                            " does not match expected " + std::to_string(spec.input_width()));
    if (cache) cache->layers.assign(layers.size(), {});
    Tensor h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Layer& layer = layers[l];
      Tensor a = h * layer.weight;
      a.rowwise() += layer.bias.transpose();
      ForwardCache::Entry* entry = cache ? &cache->layers[l] : nullptr;
      if (entry) entry->input = std::move(h);
      if (spec.has_batch_norm(l)) {
        if (mode == Mode::Train) {
          require(a.rows() >= 2, name + ": batch norm needs a batch of at least 2");
          const Vector mean = a.colwise().mean().transpose();
          a.rowwise() -= mean.transpose();
          const Vector var = a.array().square().colwise().mean().transpose();
          const Vector inv = (var.array() + kBatchNormEps).rsqrt();
          a = a * inv.asDiagonal();
          if (entry) {
            entry->normalized = a;
            entry->inv_std = inv;
            entry->batch_mean = mean;
            entry->batch_var = var;
          }
        } else {
          a.rowwise() -= layer.running_mean.transpose();
          a = a * (layer.running_var.array() + kBatchNormEps).rsqrt().matrix().asDiagonal();
        }
        a = a * layer.gamma.asDiagonal();
        a.rowwise() += layer.beta.transpose();
      }
      if (spec.activation(l) == Activation::ReLU) {
        h = a.cwiseMax(0.0);
      } else {
        h = a;
      }
      if (!h.allFinite())
        throw NumericalError(name + ": non-finite output in layer " + std::to_string(l));
      if (entry) entry->pre_activation = std::move(a);
    }
    return h;
  }

  /// Reverse pass. Accumulates parameter gradients into `grad` and returns
  /// the gradient with respect to the input (empty when `input_grad` is false).
  Tensor backward(const ForwardCache& cache, const Tensor& upstream, MlpGrad& grad,
                  bool input_grad = true) const {
    if (cache.layers.size() != layers.size() || grad.layers.size() != layers.size())
      throw ValidationError(name + ": cache/gradient does not match network");
    if (static_cast<std::size_t>(upstream.cols()) != spec.output_width() ||
        upstream.rows() != cache.layers.back().pre_activation.rows())
      throw ValidationError(name + ": upstream gradient shape mismatch");
    Tensor d = upstream;
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& entry = cache.layers[l];
      const Layer& layer = layers[l];
      LayerGrad& g = grad.layers[l];
      if (spec.activation(l) == Activation::ReLU)
        d = d.cwiseProduct((entry.pre_activation.array() > 0.0).cast<double>().matrix());
      if (spec.has_batch_norm(l)) {
        g.gamma += d.cwiseProduct(entry.normalized).colwise().sum().transpose();
        g.beta += d.colwise().sum().transpose();
        Tensor dn = d * layer.gamma.asDiagonal();
        const Eigen::RowVectorXd mean_d = dn.colwise().mean();
        const Eigen::RowVectorXd mean_dx = dn.cwiseProduct(entry.normalized).colwise().mean();
        dn.rowwise() -= mean_d;
        dn -= entry.normalized * mean_dx.asDiagonal();
        d = dn * entry.inv_std.asDiagonal();
      }
      g.weight.noalias() += entry.input.transpose() * d;
      g.bias += d.colwise().sum().transpose();
      if (l == 0 && !input_grad) return Tensor();
      d = (d * layer.weight.transpose()).eval();
    }
    return d;
  }

  void update_running_stats(const ForwardCache& cache, double momentum = 0.1) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (!spec.has_batch_norm(l)) continue;
      const auto& e = cache.layers[l];
      layers[l].running_mean = (1.0 - momentum) * layers[l].running_mean + momentum * e.batch_mean;
      layers[l].running_var = (1.0 - momentum) * layers[l].running_var + momentum * e.batch_var;
    }
  }
};

}  // namespace twinpurify::nn
