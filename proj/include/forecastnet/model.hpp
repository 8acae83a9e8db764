#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forecastnet/cells.hpp"
#include "forecastnet/checkpoint.hpp"
#include "forecastnet/errors.hpp"
#include "forecastnet/tensor.hpp"

namespace forecastnet {

enum class Variant { fn, cfn, fn2, cfn2 };
enum class CellKind { dense, conv };
enum class HeadKind { mixture, linear };
enum class PredictMode { mean, sample };

inline const char *to_string(Variant v) {
  switch (v) {
    case Variant::fn: return "fn";
    case Variant::cfn: return "cfn";
    case Variant::fn2: return "fn2";
    case Variant::cfn2: return "cfn2";
  }
  return "?";
}

inline Variant variant_from_string(const std::string &s) {
  if (s == "fn" || s == "FN") return Variant::fn;
  if (s == "cfn" || s == "cFN") return Variant::cfn;
  if (s == "fn2" || s == "FN2") return Variant::fn2;
  if (s == "cfn2" || s == "cFN2") return Variant::cfn2;
  throw ArgumentError("unknown model variant '" + s + "'");
}

inline const char *to_string(PredictMode m) {
  return m == PredictMode::mean ? "mean" : "sample";
}

inline PredictMode predict_mode_from_string(const std::string &s) {
  if (s == "mean") return PredictMode::mean;
  if (s == "sample") return PredictMode::sample;
  throw ArgumentError("unknown prediction mode '" + s + "'");
}

struct ModelSpec {
  Variant variant = Variant::fn2;
  std::size_t tau = 1;
  std::size_t hidden = 24;
  std::uint64_t seed = 0;
  // Cell plan. The defaults are the FN/cFN configuration; the dense-cell
  // fields are ignored by the convolutional variants.
  std::size_t dense_layers = 2;
  Activation activation = Activation::relu;
  InitScheme init = InitScheme::he;

  static ModelSpec make(Variant v, std::size_t tau, std::size_t hidden = 24,
                        std::uint64_t seed = 0) {
    ModelSpec s;
    s.variant = v;
    s.tau = tau;
    s.hidden = hidden;
    s.seed = seed;
    return s;
  }

  std::size_t n_inputs() const { return 2 * tau; }
  std::size_t n_outputs() const { return tau; }

  CellKind cell_kind() const {
    return variant == Variant::cfn || variant == Variant::cfn2 ? CellKind::conv
                                                               : CellKind::dense;
  }
  HeadKind head_kind() const {
    return variant == Variant::fn || variant == Variant::cfn ? HeadKind::mixture
                                                             : HeadKind::linear;
  }

  // Width of the input seen by cell `i` (0-based): x alone for the first
  // cell, then x, the previous cell's activation and the previous forecast.
  std::size_t cell_input_width(std::size_t i) const {
    return i == 0 ? n_inputs() : n_inputs() + hidden + 1;
  }

  void validate() const {
    if (tau < 1) throw SpecError("tau must be >= 1");
    if (hidden < 1) throw SpecError("hidden width must be >= 1");
    if (cell_kind() == CellKind::dense && dense_layers < 1)
      throw SpecError("dense cells need at least one layer");
  }

  nlohmann::json to_json() const {
    return {{"variant", to_string(variant)},
            {"tau", tau},
            {"hidden", hidden},
            {"seed", seed},
            {"dense_layers", dense_layers},
            {"activation", to_string(activation)},
            {"init", to_string(init)}};
  }

  static ModelSpec from_json(const nlohmann::json &j) {
    ModelSpec s;
    s.variant = variant_from_string(j.at("variant").get<std::string>());
    s.tau = j.at("tau").get<std::size_t>();
    s.hidden = j.at("hidden").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.dense_layers = j.value("dense_layers", std::size_t{2});
    s.activation = activation_from_string(j.value("activation", std::string("relu")));
    s.init = init_scheme_from_string(j.value("init", std::string("he")));
    return s;
  }

  friend bool operator==(const ModelSpec &, const ModelSpec &) = default;
};

struct ForecastResult {
  Tensor point;                // [tau]
  std::optional<Tensor> sigma; // [tau], mixture heads only
  PredictMode mode = PredictMode::mean;
};

struct ParamCensus {
  std::size_t total = 0;
  std::vector<std::size_t> per_cell;  // cell + its output head
  std::size_t shared = 0;             // elements whose id is used more than once
};

// One sequence position: a hidden cell and the output interleaved after it.
struct Stage {
  std::variant<DenseCell, ConvCell> cell;
  std::variant<MixtureHead, LinearHead> head;

  template <class F>
  void for_each_param(F &&f) {
    std::visit([&](auto &c) { c.for_each_param(f); }, cell);
    std::visit([&](auto &h) { h.for_each_param(f); }, head);
  }
  template <class F>
  void for_each_param(F &&f) const {
    std::visit([&](const auto &c) { c.for_each_param(f); }, cell);
    std::visit([&](const auto &h) { h.for_each_param(f); }, head);
  }
};

class Model {
 public:
  static Model build(const ModelSpec &spec) {
    spec.validate();
    Model m;
    m.spec_ = spec;
    ParamFactory pf(spec.seed);
    for (std::size_t i = 0; i < spec.n_outputs(); ++i) {
      const std::string prefix = "cell" + std::to_string(i + 1);
      const std::size_t in = spec.cell_input_width(i);
      Stage st{
          spec.cell_kind() == CellKind::dense
              ? std::variant<DenseCell, ConvCell>(DenseCell::make(
                    pf, prefix, in, spec.hidden, spec.dense_layers,
                    spec.activation, spec.init))
              : std::variant<DenseCell, ConvCell>(ConvCell::make(
                    pf, prefix, in, spec.hidden, spec.hidden, spec.init)),
          spec.head_kind() == HeadKind::mixture
              ? std::variant<MixtureHead, LinearHead>(
                    MixtureHead::make(pf, prefix, spec.hidden, spec.init))
              : std::variant<MixtureHead, LinearHead>(
                    LinearHead::make(pf, prefix, spec.hidden, spec.init))};
      m.stages_.push_back(std::move(st));
    }
    return m;
  }

  const ModelSpec &spec() const { return spec_; }
  std::vector<Stage> &stages() { return stages_; }
  const std::vector<Stage> &stages() const { return stages_; }
  std::size_t n_inputs() const { return spec_.n_inputs(); }
  std::size_t n_outputs() const { return spec_.n_outputs(); }

  template <class F>
  void for_each_param(F &&f) {
    for (auto &s : stages_) s.for_each_param(f);
  }
  template <class F>
  void for_each_param(F &&f) const {
    for (const auto &s : stages_) s.for_each_param(f);
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

  // Teacher-forced loss: cell i+1 is fed the ground-truth y_i. Mean Gaussian
  // NLL over the horizon for mixture heads, MSE for linear heads.
  NodeId loss(Tape &t, std::span<const double> x, std::span<const double> y) {
    return loss_impl(*this, t, x, y);
  }
  NodeId loss(Tape &t, std::span<const double> x,
              std::span<const double> y) const {
    return loss_impl(*this, t, x, y);
  }

  ForecastResult predict(std::span<const double> x, PredictMode mode,
                         Rng *rng = nullptr) const {
    check_input(x);
    if (mode == PredictMode::sample && spec_.head_kind() == HeadKind::mixture &&
        rng == nullptr)
      throw ArgumentError("sample mode needs a random generator");
    const std::size_t n = n_outputs();
    ForecastResult r{Tensor({n}), std::nullopt, mode};
    if (spec_.head_kind() == HeadKind::mixture) r.sigma = Tensor({n});
    Tape t;
    const NodeId xin = t.input(x);
    NodeId prev_a = 0;
    double prev_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const NodeId cin = i == 0 ? xin : t.concat({xin, prev_a, t.input(Tensor::scalar(prev_y))});
      const Stage &st = stages_[i];
      const NodeId a =
          std::visit([&](const auto &c) { return c.forward(t, cin); }, st.cell);
      if (const auto *mh = std::get_if<MixtureHead>(&st.head)) {
        const auto [mu, sg] = mh->forward(t, a);
        const double m = t.scalar(mu), s = t.scalar(sg);
        double out = m;
        if (mode == PredictMode::sample) {
          std::normal_distribution<double> dist(m, s);
          out = dist(*rng);
        }
        r.point[i] = out;
        (*r.sigma)[i] = s;
        prev_y = out;
      } else {
        const double v = t.scalar(std::get<LinearHead>(st.head).forward(t, a));
        r.point[i] = v;
        prev_y = v;
      }
      prev_a = a;
    }
    return r;
  }

  std::optional<Param *> find_param(const std::string &name) {
    Param *found = nullptr;
    for_each_param([&](Param &p) {
      if (p.name == name) found = &p;
    });
    return found ? std::optional<Param *>(found) : std::nullopt;
  }

  // Weight tensor of the first / last hidden layer in the whole network.
  Param &first_hidden_weight() {
    return std::visit(
        [](auto &c) -> Param & {
          if constexpr (std::is_same_v<std::decay_t<decltype(c)>, DenseCell>)
            return c.layers.front().w;
          else
            return c.conv1_k;
        },
        stages_.front().cell);
  }
  Param &last_hidden_weight() {
    return std::visit(
        [](auto &c) -> Param & {
          if constexpr (std::is_same_v<std::decay_t<decltype(c)>, DenseCell>)
            return c.layers.back().w;
          else
            return c.dense.w;
        },
        stages_.back().cell);
  }

 private:
  void check_input(std::span<const double> x) const {
    if (x.size() != n_inputs())
      throw DimensionError("model expects " + std::to_string(n_inputs()) +
                           " inputs, got " + std::to_string(x.size()));
  }

  template <class Self>
  static NodeId loss_impl(Self &self, Tape &t, std::span<const double> x,
                          std::span<const double> y) {
    self.check_input(x);
    const std::size_t n = self.n_outputs();
    if (y.size() != n)
      throw DimensionError("model expects " + std::to_string(n) +
                           " targets, got " + std::to_string(y.size()));
    const NodeId xin = t.input(x);
    std::vector<NodeId> terms;
    terms.reserve(n);
    NodeId prev_a = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const NodeId cin =
          i == 0 ? xin : t.concat({xin, prev_a, t.input(Tensor::scalar(y[i - 1]))});
      auto &st = self.stages_[i];
      const NodeId a =
          std::visit([&](auto &c) { return c.forward(t, cin); }, st.cell);
      std::visit(
          [&](auto &h) {
            using H = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<H, MixtureHead>) {
              const auto [mu, sg] = h.forward(t, a);
              terms.push_back(t.gaussian_nll(mu, sg, y[i]));
            } else {
              terms.push_back(t.squared_error(h.forward(t, a), y.subspan(i, 1)));
            }
          },
          st.head);
      prev_a = a;
    }
    return t.mean(terms);
  }

  ModelSpec spec_;
  std::vector<Stage> stages_;
};

inline Model build_model(const ModelSpec &spec) { return Model::build(spec); }

// Loss and record of one teacher-forced pass.
inline std::pair<double, Tape> forward_train(Model &m, std::span<const double> x,
                                             std::span<const double> y) {
  Tape t;
  const NodeId l = m.loss(t, x, y);
  const double v = t.scalar(l);
  return {v, std::move(t)};
}

inline ForecastResult forward_predict(const Model &m, std::span<const double> x,
                                      PredictMode mode, Rng *rng = nullptr) {
  return m.predict(x, mode, rng);
}

inline ParamCensus param_census(const Model &m) {
  ParamCensus c;
  c.per_cell.assign(m.stages().size(), 0);
  std::map<std::uint64_t, int> seen;
  for (std::size_t i = 0; i < m.stages().size(); ++i) {
    m.stages()[i].for_each_param([&](const Param &p) {
      c.total += p.size();
      c.per_cell[i] += p.size();
      if (seen[p.id]++ > 0) c.shared += p.size();
    });
  }
  return c;
}

inline std::string encode_model(const Model &m, const nlohmann::json &extra = {}) {
  nlohmann::json header;
  header["kind"] = "forecastnet";
  header["spec"] = m.spec().to_json();
  header["seed"] = m.spec().seed;
  if (!extra.is_null()) header["extra"] = extra;
  return checkpoint::encode(header, m.params());
}

inline void save_model(const Model &m, const std::string &path,
                       const nlohmann::json &extra = {}) {
  checkpoint::write_file(path, encode_model(m, extra));
}

inline Model model_from_checkpoint(const checkpoint::Contents &c) {
  if (c.header.value("kind", "") != "forecastnet")
    throw FormatError("checkpoint does not hold a forecastnet model");
  ModelSpec spec;
  try {
    spec = ModelSpec::from_json(c.header.at("spec"));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("checkpoint: bad spec: ") + e.what());
  }
  Model m = Model::build(spec);
  checkpoint::restore(c, m.params());
  return m;
}

inline Model load_model(const std::string &path) {
  return model_from_checkpoint(checkpoint::decode(checkpoint::read_file(path)));
}

}  // namespace forecastnet
