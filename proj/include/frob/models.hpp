// Dense networks: the K-class classifier and the boundary generator.
#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "frob/grad.hpp"
#include "frob/matrix.hpp"

namespace frob {

enum class Activation { relu, tanh };

inline std::string_view activation_name(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "' (expected relu or tanh)");
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

struct DenseLayer {
  Tensor weight;  // out x in
  Tensor bias;    // out
};

/// Fully connected network with a shared hidden activation and a linear
/// output layer.
class Mlp {
 public:
  Mlp() = default;

  /// Weights are uniform in [-1, 1] scaled by sqrt(2 / fan_in); biases zero.
  Mlp(std::uint64_t seed, std::vector<std::size_t> layer_sizes, Activation activation)
      : sizes_(std::move(layer_sizes)), activation_(activation) {
    validate_sizes(sizes_);
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
      const std::size_t in = sizes_[i], out = sizes_[i + 1];
      const double scale = std::sqrt(2.0 / static_cast<double>(in));
      std::vector<double> w(out * in);
      for (auto& v : w) v = rng.uniform(-1.0, 1.0) * scale;
      layers_.push_back({Tensor({out, in}, std::move(w), true), Tensor::zeros({out}, true)});
    }
  }

  static void validate_sizes(const std::vector<std::size_t>& sizes) {
    if (sizes.size() < 2) throw std::invalid_argument("network needs at least two layer sizes (input and output)");
    for (auto s : sizes)
      if (s == 0) throw std::invalid_argument("layer sizes must be positive");
  }

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> params;
    for (const auto& l : layers_) {
      params.push_back(l.weight);
      params.push_back(l.bias);
    }
    return params;
  }

  void set_trainable(bool flag) {
    for (auto& l : layers_) {
      l.weight.set_requires_grad(flag);
      l.bias.set_requires_grad(flag);
    }
  }

  bool trainable() const { return !layers_.empty() && layers_.front().weight.requires_grad(); }

  /// Differentiable batch forward: N x in -> N x out.
  Tensor forward(const Tensor& batch) const {
    if (batch.rank() != 2 || batch.cols() != input_dim())
      throw ShapeError("network expects batches of width " + std::to_string(input_dim()) + ", got " +
                       shape_string(batch.shape()));
    Tensor h = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = add(matmul(h, transpose(layers_[i].weight)), layers_[i].bias);
      if (i + 1 < layers_.size()) h = activation_ == Activation::relu ? relu(h) : frob::tanh(h);
    }
    return h;
  }

  Tensor forward(const Matrix& batch) const { return forward(to_tensor(batch)); }

  /// Plain evaluation of one input. Uses the same accumulation order as
  /// forward(), so results agree bit for bit.
  std::vector<double> evaluate(std::span<const double> x) const {
    if (x.size() != input_dim())
      throw ShapeError("network expects inputs of width " + std::to_string(input_dim()) + ", got " +
                       std::to_string(x.size()));
    std::vector<double> h(x.begin(), x.end());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& layer = layers_[i];
      const std::size_t out = layer.weight.rows(), in = layer.weight.cols();
      auto w = layer.weight.data();
      auto b = layer.bias.data();
      std::vector<double> next(out);
      for (std::size_t o = 0; o < out; ++o) {
        double acc = 0.0;
        for (std::size_t p = 0; p < in; ++p) acc += h[p] * w[o * in + p];
        next[o] = acc + b[o];
      }
      if (i + 1 < layers_.size()) apply_activation(next);
      h = std::move(next);
    }
    return h;
  }

  void apply_activation(std::vector<double>& v) const {
    for (auto& x : v) x = activation_ == Activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
  }

  /// Deep copy with fresh parameter tensors.
  Mlp clone() const {
    Mlp copy;
    copy.sizes_ = sizes_;
    copy.activation_ = activation_;
    for (const auto& l : layers_) {
      copy.layers_.push_back({Tensor(l.weight.shape(), {l.weight.data().begin(), l.weight.data().end()},
                                     l.weight.requires_grad()),
                              Tensor(l.bias.shape(), {l.bias.data().begin(), l.bias.data().end()},
                                     l.bias.requires_grad())});
    }
    return copy;
  }

  std::vector<double> flat_parameters() const {
    std::vector<double> flat;
    for (const auto& p : parameters()) flat.insert(flat.end(), p.data().begin(), p.data().end());
    return flat;
  }

  /// Text checkpoint: header line, activation, layer sizes, then each
  /// layer's weights and biases in row-major order at 17 significant digits.
  void save(std::ostream& out) const {
    out << "frob-mlp 1\n";
    out << "activation " << activation_name(activation_) << '\n';
    out << "layers " << sizes_.size();
    for (auto s : sizes_) out << ' ' << s;
    out << '\n';
    for (const auto& l : layers_) {
      write_values(out, "weight", l.weight.data());
      write_values(out, "bias", l.bias.data());
    }
  }

  static Mlp load(std::istream& in) {
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "frob-mlp" || version != 1)
      throw std::runtime_error("checkpoint: missing 'frob-mlp 1' header");
    std::string act;
    if (!(in >> tag >> act) || tag != "activation") throw std::runtime_error("checkpoint: missing activation");
    std::size_t count = 0;
    if (!(in >> tag >> count) || tag != "layers") throw std::runtime_error("checkpoint: missing layer sizes");
    std::vector<std::size_t> sizes(count);
    for (auto& s : sizes)
      if (!(in >> s)) throw std::runtime_error("checkpoint: truncated layer sizes");
    Mlp m;
    validate_sizes(sizes);
    m.sizes_ = sizes;
    m.activation_ = parse_activation(act);
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      auto w = read_values(in, "weight", sizes[i + 1] * sizes[i]);
      auto b = read_values(in, "bias", sizes[i + 1]);
      m.layers_.push_back({Tensor({sizes[i + 1], sizes[i]}, std::move(w), true),
                           Tensor({sizes[i + 1]}, std::move(b), true)});
    }
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    save(out);
  }

  static Mlp load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    return load(in);
  }

 private:
  static void write_values(std::ostream& out, std::string_view tag, std::span<const double> values) {
    out << tag << ' ' << values.size();
    for (double v : values) out << ' ' << format_double(v);
    out << '\n';
  }

  static std::vector<double> read_values(std::istream& in, std::string_view expected, std::size_t n) {
    std::string tag;
    std::size_t count = 0;
    if (!(in >> tag >> count) || tag != expected || count != n)
      throw std::runtime_error("checkpoint: expected " + std::string(expected) + " block of " +
                               std::to_string(n) + " values");
    std::vector<double> values(n);
    std::string token;
    for (auto& v : values) {
      if (!(in >> token) || !parse_double(token, v))
        throw std::runtime_error("checkpoint: bad number '" + token + "'");
    }
    return values;
  }

  std::vector<std::size_t> sizes_;
  Activation activation_ = Activation::relu;
  std::vector<DenseLayer> layers_;
};

/// K-class discriminative model producing logits; no softmax inside.
class MlpClassifier {
 public:
  MlpClassifier() = default;
  MlpClassifier(std::uint64_t seed, std::vector<std::size_t> layer_sizes, Activation activation)
      : net_(seed, std::move(layer_sizes), activation) {}
  explicit MlpClassifier(Mlp net) : net_(std::move(net)) {}

  std::size_t input_dim() const { return net_.input_dim(); }
  std::size_t num_classes() const { return net_.output_dim(); }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  Tensor logits(const Tensor& batch) const { return net_.forward(batch); }
  Tensor logits(const Matrix& batch) const { return net_.forward(batch); }
  std::vector<double> logits(std::span<const double> x) const { return net_.evaluate(x); }

  MlpClassifier clone() const { return MlpClassifier(net_.clone()); }

 private:
  Mlp net_;
};

/// N x latent_dim standard-normal draws with their seed.
struct LatentBatch {
  Matrix values;
  std::uint64_t seed = 0;

  std::size_t size() const { return values.rows; }
  std::size_t latent_dim() const { return values.cols; }
};

/// Generator mapping latents to data space.
class BoundaryGenerator {
 public:
  BoundaryGenerator() = default;
  BoundaryGenerator(std::uint64_t seed, std::vector<std::size_t> layer_sizes, Activation activation)
      : net_(seed, std::move(layer_sizes), activation) {}
  explicit BoundaryGenerator(Mlp net) : net_(std::move(net)) {}

  std::size_t latent_dim() const { return net_.input_dim(); }
  std::size_t output_dim() const { return net_.output_dim(); }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  Tensor generate(const Tensor& latents) const {
    if (latents.rank() != 2 || latents.cols() != latent_dim())
      throw ShapeError("generator expects latents of width " + std::to_string(latent_dim()) + ", got " +
                       shape_string(latents.shape()));
    return net_.forward(latents);
  }
  Tensor generate(const LatentBatch& latents) const { return generate(to_tensor(latents.values)); }

  BoundaryGenerator clone() const { return BoundaryGenerator(net_.clone()); }

 private:
  Mlp net_;
};

}  // namespace frob
