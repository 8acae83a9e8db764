#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forecastnet/cells.hpp"
#include "forecastnet/checkpoint.hpp"
#include "forecastnet/errors.hpp"
#include "forecastnet/tensor.hpp"

namespace forecastnet {

struct MlpSpec {
  std::size_t n_inputs = 2;
  std::vector<std::size_t> hidden = {4};
  std::size_t n_outputs = 1;
  Activation activation = Activation::relu;
  InitScheme init = InitScheme::he;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_inputs == 0 || n_outputs == 0) throw SpecError("MLP needs inputs and outputs");
    for (std::size_t h : hidden)
      if (h == 0) throw SpecError("MLP hidden layers must be non-empty");
  }

  nlohmann::json to_json() const {
    return {{"n_inputs", n_inputs},   {"hidden", hidden},
            {"n_outputs", n_outputs}, {"activation", to_string(activation)},
            {"init", to_string(init)}, {"seed", seed}};
  }

  static MlpSpec from_json(const nlohmann::json &j) {
    MlpSpec s;
    s.n_inputs = j.at("n_inputs").get<std::size_t>();
    s.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    s.n_outputs = j.at("n_outputs").get<std::size_t>();
    s.activation = activation_from_string(j.at("activation").get<std::string>());
    s.init = init_scheme_from_string(j.at("init").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  }
};

// Plain feed-forward network: all outputs sit after the last hidden layer.
class Mlp {
 public:
  static Mlp build(const MlpSpec &spec) {
    spec.validate();
    Mlp m;
    m.spec_ = spec;
    ParamFactory pf(spec.seed);
    std::size_t width = spec.n_inputs;
    for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
      const std::string tag = "hidden" + std::to_string(l + 1);
      m.hidden_.push_back({pf.weight(tag + ".w", {spec.hidden[l], width}, spec.init),
                           pf.bias(tag + ".b", spec.hidden[l]), spec.activation});
      width = spec.hidden[l];
    }
    m.out_w_ = pf.weight("out.w", {spec.n_outputs, width}, spec.init);
    m.out_b_ = pf.bias("out.b", spec.n_outputs);
    return m;
  }

  const MlpSpec &spec() const { return spec_; }
  std::size_t n_inputs() const { return spec_.n_inputs; }
  std::size_t n_outputs() const { return spec_.n_outputs; }
  std::vector<DenseLayer> &hidden_layers() { return hidden_; }

  template <class F>
  void for_each_param(F &&f) {
    for (auto &l : hidden_) { f(l.w); f(l.b); }
    f(out_w_); f(out_b_);
  }
  template <class F>
  void for_each_param(F &&f) const {
    for (const auto &l : hidden_) { f(l.w); f(l.b); }
    f(out_w_); f(out_b_);
  }

  std::vector<Param *> params() {
    std::vector<Param *> out;
    for_each_param([&](Param &p) { out.push_back(&p); });
    return out;
  }
  std::vector<const Param *> params() const {
    std::vector<const Param *> out;
    for_each_param([&](const Param &p) { out.push_back(&p); });
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_param([&](const Param &p) { n += p.size(); });
    return n;
  }

  NodeId output(Tape &t, NodeId x) { return output_impl(*this, t, x); }
  NodeId output(Tape &t, NodeId x) const { return output_impl(*this, t, x); }

  // Mean squared error over all outputs.
  NodeId loss(Tape &t, std::span<const double> x, std::span<const double> y) {
    check(x, y);
    return t.squared_error(output(t, t.input(x)), y);
  }
  NodeId loss(Tape &t, std::span<const double> x, std::span<const double> y) const {
    check(x, y);
    return t.squared_error(output(t, t.input(x)), y);
  }

  Tensor predict(std::span<const double> x) const {
    if (x.size() != spec_.n_inputs)
      throw DimensionError("MLP expects " + std::to_string(spec_.n_inputs) + " inputs");
    Tape t;
    return t.tensor(output(t, t.input(x)));
  }

  Param &first_hidden_weight() { return hidden_.empty() ? out_w_ : hidden_.front().w; }
  Param &last_hidden_weight() { return hidden_.empty() ? out_w_ : hidden_.back().w; }

 private:
  void check(std::span<const double> x, std::span<const double> y) const {
    if (x.size() != spec_.n_inputs || y.size() != spec_.n_outputs)
      throw DimensionError("MLP input/target size mismatch");
  }

  template <class Self>
  static NodeId output_impl(Self &self, Tape &t, NodeId x) {
    NodeId h = x;
    for (auto &l : self.hidden_) h = DenseLayer::forward(l, t, h);
    return t.affine(t.param(self.out_w_), h, t.param(self.out_b_));
  }

  MlpSpec spec_;
  std::vector<DenseLayer> hidden_;
  Param out_w_, out_b_;
};

// 2tau inputs -> 4tau ReLU units -> tau linear outputs.
inline Mlp build_mlp(std::size_t tau, std::uint64_t seed = 0) {
  if (tau < 1) throw SpecError("tau must be >= 1");
  MlpSpec s;
  s.n_inputs = 2 * tau;
  s.hidden = {4 * tau};
  s.n_outputs = tau;
  s.activation = Activation::relu;
  s.init = InitScheme::he;
  s.seed = seed;
  return Mlp::build(s);
}

// Repeats the most recent seasonal cycle.
inline Tensor seasonal_naive(std::span<const double> input, std::size_t tau) {
  if (tau == 0 || input.size() != 2 * tau)
    throw DimensionError("seasonal_naive: input must hold 2*tau values");
  return Tensor::vector(std::vector<double>(input.end() - static_cast<std::ptrdiff_t>(tau),
                                            input.end()));
}

inline std::string encode_mlp(const Mlp &m, const nlohmann::json &extra = {}) {
  nlohmann::json header;
  header["kind"] = "mlp";
  header["spec"] = m.spec().to_json();
  header["seed"] = m.spec().seed;
  if (!extra.is_null()) header["extra"] = extra;
  return checkpoint::encode(header, m.params());
}

inline Mlp mlp_from_checkpoint(const checkpoint::Contents &c) {
  if (c.header.value("kind", "") != "mlp")
    throw FormatError("checkpoint does not hold an MLP");
  MlpSpec spec;
  try {
    spec = MlpSpec::from_json(c.header.at("spec"));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("checkpoint: bad MLP spec: ") + e.what());
  }
  Mlp m = Mlp::build(spec);
  checkpoint::restore(c, m.params());
  return m;
}

}  // namespace forecastnet
