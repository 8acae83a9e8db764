#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "forecastnet/data.hpp"
#include "forecastnet/synth.hpp"

using namespace forecastnet;

TEST(Synth, BaselinePointValues) {
  const Series s = gen_baseline({});
  ASSERT_EQ(s.size(), 4320u);
  EXPECT_EQ(s.tau, 20u);
  EXPECT_EQ(s.values[0], 0.0);
  // 2 sin(pi/2) + sin(pi/10) / 3
  EXPECT_NEAR(s.values[5], 2.0 + std::sin(std::numbers::pi / 10.0) / 3.0, 1e-14);
  EXPECT_NEAR(s.values[5], 2.10301, 1e-5);
}

TEST(Synth, BaselineTableStats) {
  const auto st = rounded(series_stats(gen_baseline({}).values));
  EXPECT_EQ(st.min, -2.33);
  EXPECT_EQ(st.max, 2.33);
  EXPECT_EQ(st.mean, 0.0);
  EXPECT_EQ(st.std, 1.43);
}

TEST(Synth, BaselinePeriodicity) {
  // the slow component has period 100
  const Series s = gen_baseline({});
  for (std::size_t t = 0; t + 100 < s.size(); t += 37)
    EXPECT_NEAR(s.values[t], s.values[t + 100], 1e-9);
}

TEST(Synth, ModulatedEnvelope) {
  SynthConfig c;
  c.variant = SynthVariant::modulated;
  const Series s = generate(c);
  EXPECT_EQ(s.size(), 4320u);
  EXPECT_EQ(s.values[0], 0.0);
  // envelope sin(2 pi t / 120) vanishes every 60 steps
  for (std::size_t t = 0; t < s.size(); t += 60) EXPECT_NEAR(s.values[t], 0.0, 1e-12);
  for (std::size_t t = 0; t + 600 < s.size(); t += 53)
    EXPECT_NEAR(s.values[t], s.values[t + 600], 1e-9);
  double peak = 0.0;
  for (double v : s.values) peak = std::max(peak, std::abs(v));
  EXPECT_LE(peak, 0.5 * 0.8 + 1e-12);
}

TEST(Synth, Deterministic) {
  EXPECT_EQ(gen_baseline({}).values, gen_baseline({}).values);
}

TEST(Synth, InvalidConfig) {
  SynthConfig c;
  c.length = 0;
  EXPECT_THROW(gen_baseline(c), ArgumentError);
  c.length = 10;
  c.frequency = 0.0;
  EXPECT_THROW(gen_modulated(c), ArgumentError);
  EXPECT_THROW(synth_variant_from_string("square"), ArgumentError);
}
