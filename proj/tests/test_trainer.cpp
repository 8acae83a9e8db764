#include <cmath>

#include <gtest/gtest.h>

#include "forecastnet/experiments.hpp"

using namespace forecastnet;

namespace {

Param scalar_param(double v) { return Param(0, "theta", Tensor::vector({v})); }

std::vector<WindowSample> synthetic_windows(std::size_t tau, std::size_t length) {
  SynthConfig sc;
  sc.length = length;
  const Series s = gen_baseline(sc);
  const ScaleParams sp = fit_scaler(s);
  return window(sp.apply(s.values), tau);
}

}  // namespace

TEST(Adam, ZeroGradLeavesParamsUnchanged) {
  Param p = scalar_param(1.25);
  std::vector<Param *> ps = {&p};
  AdamState st(ps);
  adam_step(st, ps, 0.1);
  EXPECT_EQ(p.value[0], 1.25);
  EXPECT_EQ(st.t, 1u);
}

TEST(Adam, FirstStepIsMinusLr) {
  Param p = scalar_param(0.0);
  std::vector<Param *> ps = {&p};
  AdamState st(ps);
  p.grad[0] = 1.0;
  adam_step(st, ps, 0.1);
  // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
  EXPECT_NEAR(p.value[0], -0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(p.grad[0], 0.0);
}

TEST(Adam, FirstStepMagnitudeBoundedByLr) {
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 5.0);
  Param p(0, "w", Tensor({50}));
  for (double &g : p.grad.data()) g = n(rng);
  std::vector<Param *> ps = {&p};
  AdamState st(ps);
  adam_step(st, ps, 0.01);
  for (double v : p.value.data()) EXPECT_LE(std::abs(v), 0.01 * (1.0 + 1e-12));
}

TEST(Adam, RejectsNonPositiveLr) {
  Param p = scalar_param(0.0);
  std::vector<Param *> ps = {&p};
  AdamState st(ps);
  EXPECT_THROW(adam_step(st, ps, 0.0), ArgumentError);
  EXPECT_THROW(adam_step(st, ps, -1.0), ArgumentError);
}

TEST(Adam, IdenticalTrajectories) {
  auto run = [] {
    Param p = scalar_param(0.3);
    std::vector<Param *> ps = {&p};
    AdamState st(ps);
    std::vector<double> traj;
    for (int k = 0; k < 20; ++k) {
      p.grad[0] = 2.0 * p.value[0] - 1.0;
      adam_step(st, ps, 0.05);
      traj.push_back(p.value[0]);
    }
    return traj;
  };
  EXPECT_EQ(run(), run());
}

TEST(GradLog, Values) {
  Model m = Model::build(ModelSpec::make(Variant::fn2, 2, 2));
  EXPECT_EQ(grad_log(m, {"first", "last"}), (std::vector<double>{0.0, 0.0}));
  Param &w = m.first_hidden_weight();
  w.grad.fill(0.0);
  w.grad[0] = 1.0; w.grad[1] = -2.0; w.grad[2] = 3.0; w.grad[3] = -4.0;
  // first hidden weight is [2 x 4]: mean |g| = 10 / 8
  EXPECT_DOUBLE_EQ(grad_log(m, {"first"})[0], 10.0 / 8.0);
  Param &b = *m.find_param("cell1.dense1.b").value();
  b.grad[0] = -2.0;
  b.grad[1] = -2.0;
  EXPECT_DOUBLE_EQ(grad_log(m, {"cell1.dense1.b"})[0], 2.0);
  EXPECT_THROW(grad_log(m, {"nope"}), ArgumentError);
  EXPECT_DOUBLE_EQ(mean_abs(std::vector<double>{-2.0}), 2.0);
  EXPECT_DOUBLE_EQ(mean_abs(std::vector<double>{1, -2, 3, -4}), 2.5);
}

TEST(ValidationSplit, ChronologicalLastTenth) {
  const auto w = synthetic_windows(5, 115);  // 101 windows
  ASSERT_EQ(w.size(), 101u);
  const auto [tr, va] = validation_split(w, 0.1);
  EXPECT_EQ(tr.size(), 91u);
  EXPECT_EQ(va.size(), 10u);
  EXPECT_EQ(va.front().origin, tr.back().origin + 1);
  EXPECT_THROW(validation_split(std::span<const WindowSample>(w).first(1), 0.1), ArgumentError);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  const auto w = synthetic_windows(3, 60);
  Model m = Model::build(ModelSpec::make(Variant::fn2, 3, 4, 1));
  const Model before = m;
  TrainConfig c;
  c.max_epochs = 0;
  const auto h = train(m, w, c);
  EXPECT_EQ(h.epochs(), 0u);
  EXPECT_EQ(encode_model(m), encode_model(before));
}

TEST(Train, EmptySamplesThrow) {
  Model m = Model::build(ModelSpec::make(Variant::fn2, 3, 4, 1));
  EXPECT_THROW(train(m, std::span<const WindowSample>{}, TrainConfig{}), ArgumentError);
}

TEST(Train, HistoryInvariantsAndDeterminism) {
  const auto w = synthetic_windows(4, 400);
  auto run = [&] {
    Model m = Model::build(ModelSpec::make(Variant::fn, 4, 8, 2));
    TrainConfig c;
    c.max_epochs = 15;
    c.learning_rate = 1e-2;
    c.seed = 77;
    auto h = train(m, w, c);
    return std::pair{h, encode_model(m)};
  };
  const auto [h, bytes] = run();
  const auto [h2, bytes2] = run();
  EXPECT_EQ(bytes, bytes2);
  EXPECT_EQ(h.train_loss, h2.train_loss);
  EXPECT_EQ(h.val_loss, h2.val_loss);
  const std::size_t n = h.epochs();
  ASSERT_GT(n, 0u);
  EXPECT_EQ(h.val_loss.size(), n);
  EXPECT_EQ(h.grad_first.size(), n);
  EXPECT_EQ(h.grad_last.size(), n);
  EXPECT_EQ(h.seconds.size(), n);
  for (double s : h.seconds) EXPECT_GT(s, 0.0);
  double best = INFINITY;
  for (double v : h.val_loss) best = std::min(best, v);
  EXPECT_EQ(h.best_val_loss, h.val_loss[h.best_epoch - 1]);
  EXPECT_LE(h.best_val_loss, best + 1e-5);
}

TEST(Train, RestoresBestEpochParameters) {
  const auto w = synthetic_windows(3, 300);
  Model m = Model::build(ModelSpec::make(Variant::fn2, 3, 6, 3));
  TrainConfig c;
  c.max_epochs = 40;
  c.learning_rate = 5e-2;  // noisy on purpose
  c.patience = 3;
  c.min_delta = 0.0;
  const auto h = train(m, w, c);
  const auto [tr, va] = validation_split(w, c.validation_fraction);
  EXPECT_DOUBLE_EQ(mean_loss(std::as_const(m), va), h.best_val_loss);
}

TEST(Train, Fn2LearnsNoiselessSynthetic) {
  // tau 20, full-length series; best validation MSE under 1e-3 and a 100x drop
  const auto w = synthetic_windows(20, 4320 - 432);
  Model m = Model::build(ModelSpec::make(Variant::fn2, 20, 24, 0));
  const auto [tr, va] = validation_split(w, 0.1);
  const double initial = mean_loss(std::as_const(m), va);
  TrainConfig c;
  c.max_epochs = 500;
  c.learning_rate = 1e-3;
  const auto h = train(m, w, c);
  EXPECT_LT(h.best_val_loss, 1e-3);
  EXPECT_GT(initial / h.best_val_loss, 100.0);
}

TEST(Train, HistoryCsv) {
  TrainHistory h;
  h.train_loss = {1.0};
  h.val_loss = {2.0};
  h.grad_first = {0.5};
  h.grad_last = {0.25};
  h.seconds = {0.1};
  const std::string csv = h.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_loss,val_loss,grad_first,grad_last,seconds");
  EXPECT_NE(csv.find("1,1,2,0.5,0.25,0.1"), std::string::npos);
}

TEST(LrSearch, SingleValueGrid) {
  const auto w = synthetic_windows(3, 200);
  TrainConfig c;
  c.lr_grid = {3e-3};
  c.max_epochs = 3;
  const auto r = lr_search([] { return Model::build(ModelSpec::make(Variant::fn2, 3, 4, 0)); }, w, c);
  EXPECT_EQ(r.best_lr, 3e-3);
  EXPECT_EQ(r.outcomes.size(), 1u);
}

TEST(LrSearch, TinyRateCannotWin) {
  const auto w = synthetic_windows(5, 600);
  TrainConfig c;
  c.lr_grid = {1e-3, 1e-30};
  c.max_epochs = 8;
  auto make = [] { return Model::build(ModelSpec::make(Variant::fn2, 5, 8, 4)); };
  const auto r = lr_search(make, w, c);
  EXPECT_EQ(r.best_lr, 1e-3);
  const auto r2 = lr_search(make, w, c);
  EXPECT_EQ(r2.best_lr, r.best_lr);
  EXPECT_EQ(r2.history.val_loss, r.history.val_loss);
}

TEST(LrSearch, TieGoesToLargerRate) {
  // a network whose loss ignores its parameters ties on every rate
  struct ConstNet {
    Param w{0, "w", Tensor::vector({1.0})};
    std::vector<Param *> params() { return {&w}; }
    NodeId loss(Tape &t, std::span<const double>, std::span<const double> y) const {
      return t.squared_error(t.input(Tensor::scalar(0.5)), y.first(1));
    }
    Param &first_hidden_weight() { return w; }
    Param &last_hidden_weight() { return w; }
  };
  const auto w = synthetic_windows(3, 200);
  TrainConfig c;
  c.lr_grid = {1e-4, 1e-2, 1e-3};
  c.max_epochs = 2;
  const auto r = lr_search([] { return ConstNet{}; }, w, c);
  EXPECT_EQ(r.outcomes[0].best_val_loss, r.outcomes[1].best_val_loss);
  EXPECT_EQ(r.best_lr, 1e-2);
}

TEST(LrSearch, AllDivergedIsSearchError) {
  const auto w = synthetic_windows(3, 200);
  TrainConfig c;
  c.lr_grid = {1e300};
  c.max_epochs = 3;
  EXPECT_THROW(
      lr_search([] { return Model::build(ModelSpec::make(Variant::fn2, 3, 4, 0)); }, w, c),
      SearchError);
}

TEST(LrSearch, ThreadedMatchesSerial) {
  const auto w = synthetic_windows(3, 200);
  TrainConfig c;
  c.lr_grid = {1e-2, 1e-3, 1e-4};
  c.max_epochs = 3;
  auto make = [] { return Model::build(ModelSpec::make(Variant::fn2, 3, 4, 0)); };
  const auto a = lr_search(make, w, c);
  c.threads = 3;
  const auto b = lr_search(make, w, c);
  EXPECT_EQ(a.best_lr, b.best_lr);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_EQ(a.outcomes[i].best_val_loss, b.outcomes[i].best_val_loss);
}
