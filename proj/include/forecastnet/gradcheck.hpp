#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forecastnet/baselines.hpp"
#include "forecastnet/cells.hpp"
#include "forecastnet/interleaved.hpp"
#include "forecastnet/model.hpp"
#include "forecastnet/tensor.hpp"

namespace forecastnet {

struct GradCheckCase {
  std::string name;
  std::size_t trials = 0;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  double tolerance = 0.0;

  bool pass() const {
    for (const auto &c : cases)
      if (!c.pass) return false;
    return !cases.empty();
  }
  std::size_t trials() const {
    std::size_t n = 0;
    for (const auto &c : cases) n += c.trials;
    return n;
  }
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tolerance"] = tolerance;
    j["pass"] = pass();
    for (const auto &c : cases)
      j["cases"].push_back({{"name", c.name},
                            {"trials", c.trials},
                            {"coordinates", c.coordinates},
                            {"max_rel_error", c.max_rel_error},
                            {"pass", c.pass}});
    return j;
  }
};

struct GradCheckConfig {
  std::size_t trials = 10;       // per case
  std::size_t depth = 6;         // interleaved chain depth
  double eps = 1e-6;
  double tolerance = 1e-5;
  double floor = 1e-3;           // relative-error denominator floor
  std::uint64_t seed = 0;
};

// Backward() gradients of `build` against central differences, over every
// element of `params`. `build` must record a scalar loss on the given tape.
inline std::pair<double, std::size_t> compare_grads(
    const std::vector<Param *> &params, const std::function<NodeId(Tape &)> &build,
    double eps, double floor) {
  for (Param *p : params) p->zero_grad();
  {
    Tape t;
    t.backward(build(t));
  }
  double worst = 0.0;
  std::size_t coords = 0;
  for (Param *p : params) {
    auto v = p->value.data();
    auto g = p->grad.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + eps;
      double fp, fm;
      {
        Tape t;
        fp = t.scalar(build(t));
      }
      v[i] = orig - eps;
      {
        Tape t;
        fm = t.scalar(build(t));
      }
      v[i] = orig;
      worst = std::max(worst, relative_error(g[i], (fp - fm) / (2.0 * eps), floor));
      ++coords;
    }
  }
  return {worst, coords};
}

namespace detail {

inline Param random_param(std::string name, const Shape &shape, Rng &rng,
                          double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Param p;
  p.name = std::move(name);
  p.value = Tensor(shape);
  for (double &x : p.value.data()) x = u(rng);
  p.grad = Tensor(shape);
  return p;
}

inline std::vector<double> random_vec(std::size_t n, Rng &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double &x : v) x = u(rng);
  return v;
}

inline void randomize(const std::vector<Param *> &params, Rng &rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (Param *p : params)
    for (double &x : p->value.data()) x = u(rng);
}

}  // namespace detail

// Finite-difference checks for every primitive, every model variant
// (tau = 3, width 4), the MLP baseline and the interleaved chain rule.
inline GradCheckReport run_gradcheck(const GradCheckConfig &cfg) {
  GradCheckReport rep;
  rep.tolerance = cfg.tolerance;
  Rng rng(cfg.seed);

  auto run_case = [&](const std::string &name, auto &&one_trial) {
    GradCheckCase c;
    c.name = name;
    for (std::size_t k = 0; k < cfg.trials; ++k) {
      const auto [err, n] = one_trial();
      c.max_rel_error = std::max(c.max_rel_error, err);
      c.coordinates += n;
      ++c.trials;
    }
    c.pass = c.max_rel_error < cfg.tolerance;
    rep.cases.push_back(c);
  };
  using detail::random_param;
  using detail::random_vec;

  run_case("affine", [&] {
    Param w = random_param("w", {3, 4}, rng), x = random_param("x", {4}, rng),
          b = random_param("b", {3}, rng);
    const auto y = random_vec(3, rng);
    return compare_grads({&w, &x, &b}, [&](Tape &t) {
      return t.squared_error(t.affine(t.param(w), t.param(x), t.param(b)), y);
    }, cfg.eps, cfg.floor);
  });
  for (Activation a : {Activation::relu, Activation::sigmoid, Activation::softplus}) {
    run_case(std::string("activation.") + to_string(a), [&] {
      Param x = random_param("x", {6}, rng);
      const auto y = random_vec(6, rng);
      return compare_grads({&x}, [&](Tape &t) {
        return t.squared_error(t.activation(a, t.param(x)), y);
      }, cfg.eps, cfg.floor);
    });
  }
  run_case("conv1d", [&] {
    Param x = random_param("x", {2, 7}, rng), k = random_param("k", {3, 2, 2}, rng),
          b = random_param("b", {3}, rng);
    const auto y = random_vec(18, rng);
    return compare_grads({&x, &k, &b}, [&](Tape &t) {
      const NodeId h = t.conv1d_valid(t.param(x), t.param(k), t.param(b));
      return t.squared_error(t.reshape(h, {18}), y);
    }, cfg.eps, cfg.floor);
  });
  run_case("avg_pool1d", [&] {
    Param x = random_param("x", {2, 6}, rng);
    const auto y = random_vec(10, rng);
    return compare_grads({&x}, [&](Tape &t) {
      return t.squared_error(t.reshape(t.avg_pool1d(t.param(x), 2, 1), {10}), y);
    }, cfg.eps, cfg.floor);
  });
  run_case("concat", [&] {
    Param a = random_param("a", {3}, rng), b = random_param("b", {2}, rng);
    const auto y = random_vec(5, rng);
    return compare_grads({&a, &b}, [&](Tape &t) {
      return t.squared_error(t.concat({t.param(a), t.param(b)}), y);
    }, cfg.eps, cfg.floor);
  });
  run_case("reshape", [&] {
    Param x = random_param("x", {2, 3}, rng);
    const auto y = random_vec(6, rng);
    return compare_grads({&x}, [&](Tape &t) {
      return t.squared_error(t.reshape(t.param(x), {6}), y);
    }, cfg.eps, cfg.floor);
  });
  run_case("gaussian_nll", [&] {
    Param mu = random_param("mu", {1}, rng), s = random_param("s", {1}, rng, 0.3, 2.0);
    const double y = random_vec(1, rng)[0];
    return compare_grads({&mu, &s}, [&](Tape &t) {
      return t.gaussian_nll(t.param(mu), t.param(s), y);
    }, cfg.eps, cfg.floor);
  });
  run_case("mean", [&] {
    Param a = random_param("a", {1}, rng), b = random_param("b", {1}, rng);
    const auto y = random_vec(2, rng);
    return compare_grads({&a, &b}, [&](Tape &t) {
      std::vector<NodeId> parts = {t.squared_error(t.param(a), std::span(y).first(1)),
                                   t.squared_error(t.param(b), std::span(y).subspan(1))};
      return t.mean(parts);
    }, cfg.eps, cfg.floor);
  });

  for (Variant v : {Variant::fn, Variant::cfn, Variant::fn2, Variant::cfn2}) {
    run_case(std::string("model.") + to_string(v), [&] {
      Model m = Model::build(ModelSpec::make(v, 3, 4, rng()));
      // non-zero biases keep ReLU pre-activations off the kink
      detail::randomize(m.params(), rng, 0.5);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> x(6), y(3);
      for (double &e : x) e = u(rng);
      for (double &e : y) e = u(rng);
      return compare_grads(m.params(), [&](Tape &t) { return m.loss(t, x, y); },
                           cfg.eps, cfg.floor);
    });
  }
  run_case("mlp", [&] {
    Mlp m = build_mlp(3, rng());
    detail::randomize(m.params(), rng, 0.5);
    const auto x = random_vec(6, rng), y = random_vec(3, rng);
    return compare_grads(m.params(), [&](Tape &t) { return m.loss(t, x, y); },
                         cfg.eps, cfg.floor);
  });
  run_case("interleaved.depth" + std::to_string(cfg.depth), [&] {
    const auto ch = InterleavedChain::random(cfg.depth, rng);
    const auto a = analytic_interleaved_grad(ch);
    const auto b = tape_interleaved_grad(ch);
    return std::pair{max_relative_error(a, b, cfg.floor), a.size()};
  });
  return rep;
}

}  // namespace forecastnet
