#pragma once

// Checkpoint container.
//
// Layout (all integers little-endian):
//   8 bytes   magic "TWPCKPT\0"
//   u32       format version (kCheckpointVersion)
//   u64       record count
//   records:  u32 key length, key bytes, u8 type, u64 element count, payload
//             type 0: f64[count]   (IEEE-754 binary64, bit-exact)
//             type 1: u64[count]
//             type 2: u8[count]    (UTF-8 text)
// Records keep insertion order; keys are unique.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "twinpurify/error.hpp"
#include "twinpurify/nn/adam.hpp"
#include "twinpurify/nn/mlp.hpp"

namespace twinpurify::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'T', 'W', 'P', 'C', 'K', 'P', 'T', '\0'};

class Checkpoint {
 public:
  using Value = std::variant<std::vector<double>, std::vector<std::uint64_t>, std::string>;

  void put(const std::string& key, Value v) {
    for (auto& [k, existing] : records_)
      if (k == key) {
        existing = std::move(v);
        return;
      }
    records_.emplace_back(key, std::move(v));
  }
  void put_doubles(const std::string& key, std::span<const double> v) {
    put(key, std::vector<double>(v.begin(), v.end()));
  }
  void put_u64(const std::string& key, std::vector<std::uint64_t> v) { put(key, std::move(v)); }
  void put_text(const std::string& key, std::string v) { put(key, std::move(v)); }

  bool contains(const std::string& key) const { return find(key) != nullptr; }

  const std::vector<double>& doubles(const std::string& key) const { return get<std::vector<double>>(key); }
  const std::vector<std::uint64_t>& u64(const std::string& key) const {
    return get<std::vector<std::uint64_t>>(key);
  }
  const std::string& text(const std::string& key) const { return get<std::string>(key); }

  const std::vector<std::pair<std::string, Value>>& records() const { return records_; }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write checkpoint: " + path.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod(out, kCheckpointVersion);
    write_pod(out, static_cast<std::uint64_t>(records_.size()));
    for (const auto& [key, value] : records_) {
      write_pod(out, static_cast<std::uint32_t>(key.size()));
      out.write(key.data(), static_cast<std::streamsize>(key.size()));
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            std::uint8_t type = 2;
            if constexpr (std::is_same_v<T, std::vector<double>>) type = 0;
            if constexpr (std::is_same_v<T, std::vector<std::uint64_t>>) type = 1;
            write_pod(out, type);
            write_pod(out, static_cast<std::uint64_t>(v.size()));
            out.write(reinterpret_cast<const char*>(v.data()),
                      static_cast<std::streamsize>(v.size() * sizeof(v[0])));
          },
          value);
    }
    require(out.good(), "checkpoint write failed: " + path.string());
  }

  static Checkpoint load(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), "missing file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    char magic[8];
    in.read(magic, sizeof(magic));
    require(in.good() && std::memcmp(magic, kCheckpointMagic, sizeof(magic)) == 0,
            "not a checkpoint file: " + path.string());
    const auto version = read_pod<std::uint32_t>(in);
    require(version == kCheckpointVersion,
            "unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck;
    const auto count = read_pod<std::uint64_t>(in);
    for (std::uint64_t r = 0; r < count; ++r) {
      const auto klen = read_pod<std::uint32_t>(in);
      std::string key(klen, '\0');
      in.read(key.data(), klen);
      const auto type = read_pod<std::uint8_t>(in);
      const auto n = read_pod<std::uint64_t>(in);
      require(in.good() && n < (std::uint64_t{1} << 40), "corrupt checkpoint: " + path.string());
      if (type == 0) ck.put(key, read_array<double>(in, n));
      else if (type == 1) ck.put(key, read_array<std::uint64_t>(in, n));
      else if (type == 2) {
        std::string s(n, '\0');
        in.read(s.data(), static_cast<std::streamsize>(n));
        ck.put(key, std::move(s));
      } else {
        throw ValidationError("corrupt checkpoint record type in " + path.string());
      }
      require(in.good(), "truncated checkpoint: " + path.string());
    }
    return ck;
  }

 private:
  const Value* find(const std::string& key) const {
    for (const auto& [k, v] : records_)
      if (k == key) return &v;
    return nullptr;
  }
  template <class T>
  const T& get(const std::string& key) const {
    const Value* v = find(key);
    require(v != nullptr, "checkpoint is missing record '" + key + "'");
    const T* typed = std::get_if<T>(v);
    require(typed != nullptr, "checkpoint record '" + key + "' has the wrong type");
    return *typed;
  }
  template <class T>
  static void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <class T>
  static T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  template <class T>
  static std::vector<T> read_array(std::istream& in, std::uint64_t n) {
    std::vector<T> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    return v;
  }

  std::vector<std::pair<std::string, Value>> records_;
};

// --- network and optimizer serialization ------------------------------------

inline void store_mlp(Checkpoint& ck, const std::string& prefix, const Mlp& net) {
  std::vector<std::uint64_t> widths(net.spec.widths.begin(), net.spec.widths.end());
  ck.put_u64(prefix + ".widths", widths);
  ck.put_text(prefix + ".hidden_activation", to_string(net.spec.hidden_activation));
  ck.put_text(prefix + ".output_activation", to_string(net.spec.output_activation));
  std::vector<std::uint64_t> bn;
  for (std::size_t l = 0; l < net.spec.n_layers(); ++l) bn.push_back(net.spec.has_batch_norm(l));
  ck.put_u64(prefix + ".batch_norm", bn);
  ck.put_text(prefix + ".name", net.name);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    const auto tag = prefix + ".layer" + std::to_string(l);
    ck.put_doubles(tag + ".weight", as_span(layer.weight));
    ck.put_doubles(tag + ".bias", as_span(layer.bias));
    if (layer.gamma.size()) {
      ck.put_doubles(tag + ".gamma", as_span(layer.gamma));
      ck.put_doubles(tag + ".beta", as_span(layer.beta));
      ck.put_doubles(tag + ".running_mean", as_span(layer.running_mean));
      ck.put_doubles(tag + ".running_var", as_span(layer.running_var));
    }
  }
}

inline Mlp restore_mlp(const Checkpoint& ck, const std::string& prefix) {
  MLPSpec spec;
  for (auto w : ck.u64(prefix + ".widths")) spec.widths.push_back(static_cast<std::size_t>(w));
  spec.hidden_activation = parse_activation(ck.text(prefix + ".hidden_activation"));
  spec.output_activation = parse_activation(ck.text(prefix + ".output_activation"));
  for (auto f : ck.u64(prefix + ".batch_norm")) spec.batch_norm.push_back(f != 0);
  if (std::none_of(spec.batch_norm.begin(), spec.batch_norm.end(), [](bool b) { return b; }))
    spec.batch_norm.clear();
  Mlp net(spec, ck.text(prefix + ".name"));
  auto fill = [&](const std::string& key, auto& target) {
    const auto& v = ck.doubles(key);
    require(v.size() == static_cast<std::size_t>(target.size()), "checkpoint size mismatch for " + key);
    std::copy(v.begin(), v.end(), target.data());
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    const auto tag = prefix + ".layer" + std::to_string(l);
    fill(tag + ".weight", layer.weight);
    fill(tag + ".bias", layer.bias);
    if (layer.gamma.size()) {
      fill(tag + ".gamma", layer.gamma);
      fill(tag + ".beta", layer.beta);
      fill(tag + ".running_mean", layer.running_mean);
      fill(tag + ".running_var", layer.running_var);
    }
  }
  return net;
}

inline void store_adam(Checkpoint& ck, const std::string& prefix, const AdamState& s) {
  ck.put_doubles(prefix + ".hyper", std::vector<double>{s.config.learning_rate, s.config.beta1,
                                                        s.config.beta2, s.config.epsilon});
  ck.put_u64(prefix + ".step", {s.step, static_cast<std::uint64_t>(s.first_moment.size())});
  for (std::size_t b = 0; b < s.first_moment.size(); ++b) {
    ck.put_doubles(prefix + ".m" + std::to_string(b), as_span(s.first_moment[b]));
    ck.put_doubles(prefix + ".v" + std::to_string(b), as_span(s.second_moment[b]));
  }
}

inline AdamState restore_adam(const Checkpoint& ck, const std::string& prefix) {
  AdamState s;
  const auto& h = ck.doubles(prefix + ".hyper");
  require(h.size() == 4, "checkpoint: malformed optimizer record");
  s.config = {h[0], h[1], h[2], h[3]};
  const auto& step = ck.u64(prefix + ".step");
  s.step = step.at(0);
  for (std::uint64_t b = 0; b < step.at(1); ++b) {
    const auto& m = ck.doubles(prefix + ".m" + std::to_string(b));
    const auto& v = ck.doubles(prefix + ".v" + std::to_string(b));
    s.first_moment.push_back(Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(m.size())));
    s.second_moment.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  return s;
}

inline std::string serialize_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline Rng deserialize_rng(const std::string& text) {
  Rng rng;
  std::istringstream is(text);
  is >> rng;
  require(!is.fail(), "checkpoint: malformed RNG state");
  return rng;
}

}  // namespace twinpurify::nn
