#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "forecastnet/data.hpp"
#include "forecastnet/errors.hpp"
#include "forecastnet/tensor.hpp"

namespace forecastnet {

template <class N>
concept Trainable = requires(N &n, Tape &t, std::span<const double> s) {
  { n.params() } -> std::same_as<std::vector<Param *>>;
  { n.loss(t, s, s) } -> std::same_as<NodeId>;
  { n.first_hidden_weight() } -> std::same_as<Param &>;
  { n.last_hidden_weight() } -> std::same_as<Param &>;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m, v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(const std::vector<Param *> &params) {
    for (const Param *p : params) {
      m.emplace_back(p->value.shape());
      v.emplace_back(p->value.shape());
    }
  }
};

// Bias-corrected Adam update; gradients are zeroed afterwards.
inline void adam_step(AdamState &state, const std::vector<Param *> &params,
                      double lr, const AdamConfig &cfg = {}) {
  if (!(lr > 0.0)) throw ArgumentError("adam: learning rate must be > 0");
  if (state.m.size() != params.size())
    throw DimensionError("adam: state does not match parameter list");
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param &p = *params[k];
    auto th = p.value.data();
    auto g = p.grad.data();
    auto m = state.m[k].data();
    auto v = state.v[k].data();
    for (std::size_t i = 0; i < th.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      th[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
    p.zero_grad();
  }
}

struct TrainConfig {
  std::vector<double> lr_grid = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  double learning_rate = 1e-3;  // used by train(); lr_search() overrides it
  std::size_t max_epochs = 1000;
  std::size_t batch_size = 32;
  std::size_t patience = 5;
  double min_delta = 1e-5;
  double validation_fraction = 0.10;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // lr_search fan-out
  AdamConfig adam;

  void validate() const {
    for (double lr : lr_grid)
      if (!(lr > 0.0)) throw ArgumentError("learning rates must be positive");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    if (patience < 1) throw ArgumentError("patience must be >= 1");
    if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
      throw ArgumentError("validation fraction must be in (0, 1)");
  }

  nlohmann::json to_json() const {
    return {{"lr_grid", lr_grid},
            {"learning_rate", learning_rate},
            {"max_epochs", max_epochs},
            {"batch_size", batch_size},
            {"patience", patience},
            {"min_delta", min_delta},
            {"validation_fraction", validation_fraction},
            {"seed", seed},
            {"adam",
             {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"epsilon", adam.epsilon}}}};
  }
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> grad_first;  // mean |grad| of the first hidden layer
  std::vector<double> grad_last;   // mean |grad| of the last hidden layer
  std::vector<double> seconds;
  std::size_t best_epoch = 0;      // 1-based; 0 when no epoch ran
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool stopped_early = false;
  bool diverged = false;

  std::size_t epochs() const { return train_loss.size(); }

  std::string to_csv(bool with_time = true) const {
    std::ostringstream os;
    os << "epoch,train_loss,val_loss,grad_first,grad_last" << (with_time ? ",seconds" : "")
       << '\n';
    for (std::size_t e = 0; e < epochs(); ++e) {
      os << e + 1 << ',' << format_double(train_loss[e]) << ','
         << format_double(val_loss[e]) << ',' << format_double(grad_first[e]) << ','
         << format_double(grad_last[e]);
      if (with_time) os << ',' << format_double(seconds[e]);
      os << '\n';
    }
    return os.str();
  }
};

inline double mean_abs(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc / static_cast<double>(v.size());
}

// Resolves "first", "last" or an exact parameter name.
template <Trainable Net>
Param &tagged_param(Net &net, const std::string &tag) {
  if (tag == "first") return net.first_hidden_weight();
  if (tag == "last") return net.last_hidden_weight();
  for (Param *p : net.params())
    if (p->name == tag) return *p;
  throw ArgumentError("unknown layer tag '" + tag + "'");
}

template <Trainable Net>
std::vector<double> grad_log(Net &net, const std::vector<std::string> &tags) {
  std::vector<double> out;
  for (const auto &tag : tags) out.push_back(mean_abs(tagged_param(net, tag).grad.data()));
  return out;
}

template <Trainable Net>
double mean_loss(const Net &net, std::span<const WindowSample> samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  Tape t;
  for (const auto &s : samples) {
    t.clear();
    acc += t.scalar(net.loss(t, s.input.data(), s.target.data()));
  }
  return acc / static_cast<double>(samples.size());
}

// Chronological train/validation partition: the last fraction validates.
inline std::pair<std::span<const WindowSample>, std::span<const WindowSample>>
validation_split(std::span<const WindowSample> samples, double fraction) {
  if (samples.size() < 2)
    throw ArgumentError("training needs at least 2 samples, got " +
                        std::to_string(samples.size()));
  auto n_val = static_cast<std::size_t>(
      std::floor(static_cast<double>(samples.size()) * fraction));
  n_val = std::clamp<std::size_t>(n_val, 1, samples.size() - 1);
  const std::size_t n_train = samples.size() - n_val;
  return {samples.first(n_train), samples.subspan(n_train)};
}

// Mini-batch Adam with per-epoch seeded shuffling and early stopping on the
// validation loss. Parameters from the best validation epoch are restored.
template <Trainable Net>
TrainHistory train(Net &net, std::span<const WindowSample> samples,
                   const TrainConfig &cfg) {
  cfg.validate();
  const auto [train_set, val_set] = validation_split(samples, cfg.validation_fraction);
  TrainHistory h;
  if (cfg.max_epochs == 0) return h;

  const std::vector<Param *> params = net.params();
  for (Param *p : params) p->zero_grad();
  AdamState adam(params);
  Param &first = net.first_hidden_weight();
  Param &last = net.last_hidden_weight();

  std::vector<Tensor> best;
  std::vector<std::size_t> order(train_set.size());
  std::size_t wait = 0;
  Tape t;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    Rng rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_acc = 0.0, gf = 0.0, gl = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const WindowSample &s = train_set[order[k]];
        t.clear();
        const NodeId l = net.loss(t, s.input.data(), s.target.data());
        loss_acc += t.scalar(l);
        t.backward(l, weight);
      }
      gf += mean_abs(first.grad.data());
      gl += mean_abs(last.grad.data());
      ++batches;
      adam_step(adam, params, cfg.learning_rate, cfg.adam);
    }
    const double train_loss = loss_acc / static_cast<double>(order.size());
    const double val_loss = mean_loss(std::as_const(net), val_set);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

    h.train_loss.push_back(train_loss);
    h.val_loss.push_back(val_loss);
    h.grad_first.push_back(gf / static_cast<double>(batches));
    h.grad_last.push_back(gl / static_cast<double>(batches));
    h.seconds.push_back(std::max(dt.count(), 1e-9));

    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      h.diverged = true;
      break;
    }
    if (val_loss < h.best_val_loss - cfg.min_delta || h.best_epoch == 0) {
      h.best_val_loss = val_loss;
      h.best_epoch = epoch + 1;
      best.clear();
      for (const Param *p : params) best.push_back(p->value);
      wait = 0;
    } else if (++wait >= cfg.patience) {
      h.stopped_early = true;
      break;
    }
  }
  if (!best.empty())
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best[k];
  return h;
}

struct LrOutcome {
  double lr = 0.0;
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
  std::size_t epochs = 0;
};

template <class Net>
struct LrSearchResult {
  double best_lr = 0.0;
  Net net;
  TrainHistory history;
  std::vector<LrOutcome> outcomes;  // grid order
};

// Trains one fresh network per learning rate and keeps the lowest validation
// loss; ties go to the larger rate.
template <class Factory>
auto lr_search(Factory &&make_net, std::span<const WindowSample> samples,
               const TrainConfig &cfg) {
  using Net = std::decay_t<decltype(make_net())>;
  cfg.validate();
  if (cfg.lr_grid.empty()) throw ArgumentError("lr_search: empty learning-rate grid");

  struct Run {
    Net net;
    TrainHistory history;
  };
  auto run_one = [&](double lr) {
    TrainConfig c = cfg;
    c.learning_rate = lr;
    Run r{make_net(), {}};
    r.history = train(r.net, samples, c);
    return r;
  };

  std::vector<Run> runs;
  runs.reserve(cfg.lr_grid.size());
  if (cfg.threads > 1) {
    for (std::size_t i = 0; i < cfg.lr_grid.size(); i += cfg.threads) {
      std::vector<std::future<Run>> jobs;
      for (std::size_t k = i; k < std::min(cfg.lr_grid.size(), i + cfg.threads); ++k)
        jobs.push_back(std::async(std::launch::async, run_one, cfg.lr_grid[k]));
      for (auto &j : jobs) runs.push_back(j.get());
    }
  } else {
    for (double lr : cfg.lr_grid) runs.push_back(run_one(lr));
  }

  std::vector<LrOutcome> outcomes;
  std::size_t winner = runs.size();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto &h = runs[i].history;
    const bool ok = !h.diverged && std::isfinite(h.best_val_loss);
    outcomes.push_back({cfg.lr_grid[i], h.best_val_loss, !ok, h.epochs()});
    if (!ok) continue;
    if (winner == runs.size()) {
      winner = i;
      continue;
    }
    const double wv = runs[winner].history.best_val_loss;
    const double lv = cfg.lr_grid[i], lw = cfg.lr_grid[winner];
    if (h.best_val_loss < wv || (h.best_val_loss == wv && lv > lw)) winner = i;
  }
  if (winner == runs.size()) {
    std::ostringstream os;
    os << "lr_search: every learning rate diverged:";
    for (const auto &o : outcomes) os << " lr=" << o.lr << (o.diverged ? " (diverged)" : "");
    throw SearchError(os.str());
  }
  return LrSearchResult<Net>{cfg.lr_grid[winner], std::move(runs[winner].net),
                             std::move(runs[winner].history), std::move(outcomes)};
}

}  // namespace forecastnet
