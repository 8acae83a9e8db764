#include <gtest/gtest.h>

#include "forecastnet/baselines.hpp"

using namespace forecastnet;

TEST(Mlp, StandardShape) {
  const Mlp m = build_mlp(12);
  EXPECT_EQ(m.n_inputs(), 24u);
  EXPECT_EQ(m.spec().hidden, (std::vector<std::size_t>{48}));
  EXPECT_EQ(m.n_outputs(), 12u);
  EXPECT_EQ(m.parameter_count(), 24u * 48 + 48 + 48 * 12 + 12);
  EXPECT_EQ(m.predict(std::vector<double>(24, 0.5)).size(), 12u);
  EXPECT_THROW(m.predict(std::vector<double>(23)), DimensionError);
  EXPECT_THROW(build_mlp(0), SpecError);
}

TEST(Mlp, DeepSpec) {
  MlpSpec s;
  s.n_inputs = 40;
  s.hidden.assign(20, 24);
  s.n_outputs = 20;
  s.activation = Activation::sigmoid;
  s.init = InitScheme::xavier_normal;
  Mlp m = Mlp::build(s);
  EXPECT_EQ(m.hidden_layers().size(), 20u);
  EXPECT_EQ(m.first_hidden_weight().value.shape(), (Shape{24, 40}));
  s.hidden = {4, 0};
  EXPECT_THROW(Mlp::build(s), SpecError);
}

TEST(Mlp, CheckpointRoundTrip) {
  const Mlp m = build_mlp(3, 21);
  const std::string bytes = encode_mlp(m);
  const Mlp back = mlp_from_checkpoint(checkpoint::decode(bytes));
  EXPECT_EQ(encode_mlp(back), bytes);
  const std::vector<double> x = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  EXPECT_EQ(back.predict(x), m.predict(x));
}

TEST(SeasonalNaive, RepeatsLastCycle) {
  std::vector<double> x(20);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1);
  const Tensor f = seasonal_naive(x, 10);
  std::vector<double> expect(10);
  for (std::size_t i = 0; i < 10; ++i) expect[i] = static_cast<double>(i + 11);
  EXPECT_EQ(f.values(), expect);
  EXPECT_THROW(seasonal_naive(x, 9), DimensionError);
}

TEST(Mlp, ZeroWeightsZeroForecast) {
  Mlp m = build_mlp(4, 2);
  m.for_each_param([](Param &p) { p.value.fill(0.0); });
  const Tensor f = m.predict(std::vector<double>(8, 0.7));
  for (double v : f.data()) EXPECT_EQ(v, 0.0);
}

TEST(SeasonalNaive, PeriodicSeriesHasZeroError) {
  std::vector<double> x(16);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 8) * 0.5 - 1.0;
  const Tensor f = seasonal_naive(x, 8);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(f[i], x[i]);
}
