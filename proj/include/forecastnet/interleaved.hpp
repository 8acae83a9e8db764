#pragma once

#include <random>
#include <vector>

#include "forecastnet/cells.hpp"
#include "forecastnet/errors.hpp"
#include "forecastnet/tensor.hpp"

namespace forecastnet {

// Single-neuron interleaved network: hidden unit i has pre-activation
//   z_1 = w_1 x + b_1,   z_i = w_i a_{i-1} + u_i x + b_i   (i >= 2),
// a_i = sigmoid(z_i), and a linear output o_i = v_i a_i + c_i after it.
// Loss is the mean of (o_i - y_i)^2 over the depth.
struct InterleavedChain {
  std::vector<double> w, u, b, v, c, targets;
  double x = 0.0;

  std::size_t depth() const { return w.size(); }

  void validate() const {
    const std::size_t n = w.size();
    if (n == 0) throw ArgumentError("interleaved chain: depth must be >= 1");
    if (u.size() != n || b.size() != n || v.size() != n || c.size() != n ||
        targets.size() != n)
      throw ArgumentError(
          "interleaved chain: every layer needs one hidden unit, one output "
          "and one target");
  }

  static InterleavedChain random(std::size_t depth, Rng &rng) {
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::uniform_real_distribution<double> T(0.0, 1.0);
    InterleavedChain ch;
    ch.x = T(rng);
    for (std::size_t i = 0; i < depth; ++i) {
      ch.w.push_back(U(rng));
      ch.u.push_back(i == 0 ? 0.0 : U(rng));
      ch.b.push_back(U(rng));
      ch.v.push_back(U(rng));
      ch.c.push_back(U(rng));
      ch.targets.push_back(T(rng));
    }
    return ch;
  }
};

struct ChainState {
  std::vector<double> z, a, o;
  double loss = 0.0;
};

inline ChainState chain_forward(const InterleavedChain &ch) {
  ch.validate();
  const std::size_t n = ch.depth();
  ChainState s;
  s.z.resize(n);
  s.a.resize(n);
  s.o.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.z[i] = i == 0 ? ch.w[0] * ch.x + ch.b[0]
                    : ch.w[i] * s.a[i - 1] + ch.u[i] * ch.x + ch.b[i];
    s.a[i] = sigmoid(s.z[i]);
    s.o[i] = ch.v[i] * s.a[i] + ch.c[i];
    const double d = s.o[i] - ch.targets[i];
    s.loss += d * d;
  }
  s.loss /= static_cast<double>(n);
  return s;
}

// dL/dw_l for every hidden layer, evaluated term by term as the interleaved
// sum over downstream outputs:
//   dL/dw_l = sum_k dL/do_{l+k} * v_{l+k} * Psi_k * da_l/dw_l,
//   Psi_0 = 1,  Psi_k = prod_{j=1..k} da_{l+j}/da_{l+j-1}.
// The inter-cell factor includes the sigmoid slope: da_m/da_{m-1} =
// sigmoid'(z_m) w_m.
inline std::vector<double> analytic_interleaved_grad(const InterleavedChain &ch) {
  const ChainState s = chain_forward(ch);
  const std::size_t n = ch.depth();
  const double scale = 2.0 / static_cast<double>(n);
  std::vector<double> slope(n), dl_do(n);
  for (std::size_t i = 0; i < n; ++i) {
    slope[i] = s.a[i] * (1.0 - s.a[i]);
    dl_do[i] = scale * (s.o[i] - ch.targets[i]);
  }
  std::vector<double> grads(n);
  for (std::size_t l = 0; l < n; ++l) {
    const double a_prev = l == 0 ? ch.x : s.a[l - 1];
    const double da_dw = slope[l] * a_prev;
    double sum = 0.0;
    for (std::size_t k = 0; l + k < n; ++k) {
      double psi = 1.0;
      for (std::size_t j = 1; j <= k; ++j) psi *= slope[l + j] * ch.w[l + j];
      sum += dl_do[l + k] * ch.v[l + k] * psi;
    }
    grads[l] = sum * da_dw;
  }
  return grads;
}

// Same gradients through the general reverse-mode tape.
inline std::vector<double> tape_interleaved_grad(const InterleavedChain &ch) {
  ch.validate();
  const std::size_t n = ch.depth();
  std::vector<Param> hidden_w, hidden_b, out_w, out_b;
  hidden_w.reserve(n); hidden_b.reserve(n); out_w.reserve(n); out_b.reserve(n);
  std::uint64_t id = 0;
  for (std::size_t i = 0; i < n; ++i) {
    hidden_w.emplace_back(id++, "w", i == 0 ? Tensor({1, 1}, {ch.w[0]})
                                            : Tensor({1, 2}, {ch.w[i], ch.u[i]}));
    hidden_b.emplace_back(id++, "b", Tensor({1}, {ch.b[i]}));
    out_w.emplace_back(id++, "v", Tensor({1, 1}, {ch.v[i]}));
    out_b.emplace_back(id++, "c", Tensor({1}, {ch.c[i]}));
  }
  Tape t;
  const NodeId x = t.input(Tensor::scalar(ch.x));
  std::vector<NodeId> terms;
  NodeId a = x;
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId in = i == 0 ? x : t.concat({a, x});
    a = t.activation(Activation::sigmoid,
                     t.affine(t.param(hidden_w[i]), in, t.param(hidden_b[i])));
    const NodeId o = t.affine(t.param(out_w[i]), a, t.param(out_b[i]));
    terms.push_back(t.squared_error(o, std::span<const double>(&ch.targets[i], 1)));
  }
  t.backward(t.mean(terms));
  std::vector<double> grads(n);
  for (std::size_t i = 0; i < n; ++i) grads[i] = hidden_w[i].grad[0];
  return grads;
}

}  // namespace forecastnet
