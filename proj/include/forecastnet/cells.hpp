#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "forecastnet/errors.hpp"
#include "forecastnet/tensor.hpp"

namespace forecastnet {

enum class InitScheme { he, xavier_normal };

inline const char *to_string(InitScheme s) {
  return s == InitScheme::he ? "he" : "xavier_normal";
}

inline InitScheme init_scheme_from_string(const std::string &s) {
  if (s == "he") return InitScheme::he;
  if (s == "xavier_normal" || s == "xavier") return InitScheme::xavier_normal;
  throw ArgumentError("unknown init scheme '" + s + "'");
}

using Rng = std::mt19937_64;

// Fan sizes of a weight tensor: [out x in] matrices and [out x in x k] kernels.
inline std::pair<std::size_t, std::size_t> fan_in_out(const Shape &shape) {
  switch (shape.size()) {
    case 1: return {shape[0], shape[0]};
    case 2: return {shape[1], shape[0]};
    case 3: return {shape[1] * shape[2], shape[0] * shape[2]};
    default: throw ArgumentError("init: unsupported rank " + shape_str(shape));
  }
}

inline Tensor init_params(const Shape &shape, InitScheme scheme, Rng &rng) {
  const auto [fan_in, fan_out] = fan_in_out(shape);
  if (fan_in == 0 || fan_out == 0)
    throw ArgumentError("init: zero fan for shape " + shape_str(shape));
  const double stddev =
      scheme == InitScheme::he
          ? std::sqrt(2.0 / static_cast<double>(fan_in))
          : std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(shape);
  for (double &v : t.data()) v = dist(rng);
  return t;
}

// Hands out model-unique parameter ids and draws initial values from one
// seeded stream.
class ParamFactory {
 public:
  explicit ParamFactory(std::uint64_t seed) : rng_(seed) {}

  Param weight(std::string name, const Shape &shape, InitScheme scheme) {
    return Param(next_id_++, std::move(name), init_params(shape, scheme, rng_));
  }

  Param bias(std::string name, std::size_t n) {
    if (n == 0) throw ArgumentError("init: zero-length bias");
    return Param(next_id_++, std::move(name), Tensor({n}));
  }

  std::uint64_t next_id() const { return next_id_; }

 private:
  Rng rng_;
  std::uint64_t next_id_ = 0;
};

struct DenseLayer {
  Param w;  // [out x in]
  Param b;  // [out]
  Activation act = Activation::relu;

  std::size_t in_width() const { return w.value.dim(1); }
  std::size_t out_width() const { return w.value.dim(0); }

  template <class Self>
  static NodeId forward(Self &self, Tape &t, NodeId x) {
    const NodeId z = t.affine(t.param(self.w), x, t.param(self.b));
    return t.activation(self.act, z);
  }
};

// Stack of densely connected layers (two in FN/FN2).
struct DenseCell {
  std::vector<DenseLayer> layers;

  static DenseCell make(ParamFactory &pf, const std::string &prefix,
                        std::size_t in_width, std::size_t hidden,
                        std::size_t n_layers, Activation act,
                        InitScheme scheme) {
    if (n_layers == 0) throw SpecError("dense cell needs at least one layer");
    DenseCell c;
    std::size_t width = in_width;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const std::string tag = prefix + ".dense" + std::to_string(l + 1);
      DenseLayer layer{pf.weight(tag + ".w", {hidden, width}, scheme),
                       pf.bias(tag + ".b", hidden), act};
      c.layers.push_back(std::move(layer));
      width = hidden;
    }
    return c;
  }

  std::size_t in_width() const { return layers.front().in_width(); }
  std::size_t out_width() const { return layers.back().out_width(); }

  NodeId forward(Tape &t, NodeId x) { return forward_impl(*this, t, x); }
  NodeId forward(Tape &t, NodeId x) const { return forward_impl(*this, t, x); }

  template <class F>
  void for_each_param(F &&f) {
    for (auto &l : layers) {
      f(l.w);
      f(l.b);
    }
  }
  template <class F>
  void for_each_param(F &&f) const {
    for (const auto &l : layers) {
      f(l.w);
      f(l.b);
    }
  }

 private:
  template <class Self>
  static NodeId forward_impl(Self &self, Tape &t, NodeId x) {
    if (t.numel(x) != self.in_width())
      throw DimensionError("dense cell expects width " +
                           std::to_string(self.in_width()) + ", got " +
                           std::to_string(t.numel(x)));
    NodeId h = x;
    for (auto &l : self.layers) h = DenseLayer::forward(l, t, h);
    return h;
  }
};

// Sequence lengths after conv1 / pool1 / conv2 / pool2 (k=2, pool=2, stride=1).
inline std::array<std::size_t, 4> conv_cell_lengths(std::size_t len) {
  if (len < 5)
    throw DimensionError("conv cell input length " + std::to_string(len) +
                         " leaves an empty feature map (need >= 5)");
  return {len - 1, len - 2, len - 3, len - 4};
}

// conv(f, k=2) -> ReLU -> avgpool(2, 1) -> conv(f, k=2) -> ReLU ->
// avgpool(2, 1) -> flatten -> dense(h, ReLU). The cell input is one channel.
struct ConvCell {
  static constexpr std::size_t kKernel = 2;
  static constexpr std::size_t kPool = 2;
  static constexpr std::size_t kStride = 1;
  static constexpr std::size_t kMinLength = 5;

  Param conv1_k;  // [f x 1 x 2]
  Param conv1_b;
  Param conv2_k;  // [f x f x 2]
  Param conv2_b;
  DenseLayer dense;
  std::size_t input_len = 0;
  // Inputs shorter than kMinLength are right-padded with zeros.
  std::size_t padded_len = 0;

  static ConvCell make(ParamFactory &pf, const std::string &prefix,
                       std::size_t in_len, std::size_t filters,
                       std::size_t hidden, InitScheme scheme) {
    if (in_len == 0) throw SpecError("conv cell input length must be >= 1");
    ConvCell c;
    c.input_len = in_len;
    c.padded_len = std::max(in_len, kMinLength);
    const auto lens = conv_cell_lengths(c.padded_len);
    c.conv1_k = pf.weight(prefix + ".conv1.k", {filters, 1, kKernel}, scheme);
    c.conv1_b = pf.bias(prefix + ".conv1.b", filters);
    c.conv2_k =
        pf.weight(prefix + ".conv2.k", {filters, filters, kKernel}, scheme);
    c.conv2_b = pf.bias(prefix + ".conv2.b", filters);
    c.dense = DenseLayer{
        pf.weight(prefix + ".dense.w", {hidden, filters * lens[3]}, scheme),
        pf.bias(prefix + ".dense.b", hidden), Activation::relu};
    return c;
  }

  std::size_t filters() const { return conv1_k.value.dim(0); }
  std::size_t out_width() const { return dense.out_width(); }

  NodeId forward(Tape &t, NodeId x) { return forward_impl(*this, t, x); }
  NodeId forward(Tape &t, NodeId x) const { return forward_impl(*this, t, x); }

  template <class F>
  void for_each_param(F &&f) {
    f(conv1_k); f(conv1_b); f(conv2_k); f(conv2_b); f(dense.w); f(dense.b);
  }
  template <class F>
  void for_each_param(F &&f) const {
    f(conv1_k); f(conv1_b); f(conv2_k); f(conv2_b); f(dense.w); f(dense.b);
  }

 private:
  template <class Self>
  static NodeId forward_impl(Self &self, Tape &t, NodeId x) {
    if (t.numel(x) != self.input_len)
      throw DimensionError("conv cell expects length " +
                           std::to_string(self.input_len) + ", got " +
                           std::to_string(t.numel(x)));
    NodeId seq = x;
    if (self.padded_len > self.input_len) {
      const NodeId pad =
          t.input(Tensor({self.padded_len - self.input_len}));
      seq = t.concat({t.reshape(x, {self.input_len}), pad});
    }
    NodeId h = t.reshape(seq, {1, self.padded_len});
    h = t.conv1d_valid(h, t.param(self.conv1_k), t.param(self.conv1_b));
    h = t.activation(Activation::relu, h);
    h = t.avg_pool1d(h, kPool, kStride);
    h = t.conv1d_valid(h, t.param(self.conv2_k), t.param(self.conv2_b));
    h = t.activation(Activation::relu, h);
    h = t.avg_pool1d(h, kPool, kStride);
    h = t.reshape(h, {t.numel(h)});
    return DenseLayer::forward(self.dense, t, h);
  }
};

// Gaussian output: mu = W_mu a + b_mu, sigma = softplus(W_sigma a + b_sigma).
struct MixtureHead {
  Param w_mu, b_mu, w_sigma, b_sigma;

  static MixtureHead make(ParamFactory &pf, const std::string &prefix,
                          std::size_t in_width, InitScheme scheme) {
    MixtureHead h;
    h.w_mu = pf.weight(prefix + ".mu.w", {1, in_width}, scheme);
    h.b_mu = pf.bias(prefix + ".mu.b", 1);
    h.w_sigma = pf.weight(prefix + ".sigma.w", {1, in_width}, scheme);
    h.b_sigma = pf.bias(prefix + ".sigma.b", 1);
    return h;
  }

  std::pair<NodeId, NodeId> forward(Tape &t, NodeId a) {
    return forward_impl(*this, t, a);
  }
  std::pair<NodeId, NodeId> forward(Tape &t, NodeId a) const {
    return forward_impl(*this, t, a);
  }

  template <class F>
  void for_each_param(F &&f) { f(w_mu); f(b_mu); f(w_sigma); f(b_sigma); }
  template <class F>
  void for_each_param(F &&f) const { f(w_mu); f(b_mu); f(w_sigma); f(b_sigma); }

 private:
  template <class Self>
  static std::pair<NodeId, NodeId> forward_impl(Self &self, Tape &t,
                                                NodeId a) {
    const NodeId mu = t.affine(t.param(self.w_mu), a, t.param(self.b_mu));
    const NodeId pre =
        t.affine(t.param(self.w_sigma), a, t.param(self.b_sigma));
    return {mu, t.activation(Activation::softplus, pre)};
  }
};

// Unbounded scalar output y = W a + b.
struct LinearHead {
  Param w, b;

  static LinearHead make(ParamFactory &pf, const std::string &prefix,
                         std::size_t in_width, InitScheme scheme) {
    return {pf.weight(prefix + ".out.w", {1, in_width}, scheme),
            pf.bias(prefix + ".out.b", 1)};
  }

  NodeId forward(Tape &t, NodeId a) { return t.affine(t.param(w), a, t.param(b)); }
  NodeId forward(Tape &t, NodeId a) const {
    return t.affine(t.param(w), a, t.param(b));
  }

  template <class F>
  void for_each_param(F &&f) { f(w); f(b); }
  template <class F>
  void for_each_param(F &&f) const { f(w); f(b); }
};

inline Tensor dense_cell_forward(const DenseCell &cell, const Tensor &input) {
  Tape t;
  return t.tensor(cell.forward(t, t.input(input)));
}

inline Tensor conv_cell_forward(const ConvCell &cell, const Tensor &input) {
  Tape t;
  return t.tensor(cell.forward(t, t.input(input)));
}

inline std::pair<double, double> mixture_output(const MixtureHead &head,
                                                const Tensor &a) {
  Tape t;
  const auto [mu, sigma] = head.forward(t, t.input(a));
  return {t.scalar(mu), t.scalar(sigma)};
}

inline double gaussian_nll(double mu, double sigma, double y) {
  if (!(sigma > 0.0)) throw DomainError("gaussian_nll: sigma must be > 0");
  const double r = (y - mu) / sigma;
  return 0.5 * std::log(2.0 * std::numbers::pi) + std::log(sigma) + 0.5 * r * r;
}

inline double mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size())
    throw DimensionError("mse: length mismatch");
  if (pred.empty()) throw DimensionError("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

}  // namespace forecastnet
