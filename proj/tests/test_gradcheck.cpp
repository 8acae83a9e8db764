#include <gtest/gtest.h>

#include "forecastnet/gradcheck.hpp"

using namespace forecastnet;

TEST(GradCheck, EveryCasePasses) {
  GradCheckConfig cfg;
  cfg.trials = 3;
  const auto rep = run_gradcheck(cfg);
  for (const auto &c : rep.cases) {
    EXPECT_TRUE(c.pass) << c.name << " rel error " << c.max_rel_error;
    EXPECT_EQ(c.trials, 3u);
    EXPECT_GT(c.coordinates, 0u);
  }
  EXPECT_TRUE(rep.pass());
  EXPECT_EQ(rep.trials(), 3u * rep.cases.size());
}

TEST(GradCheck, CoversPrimitivesAndVariants) {
  GradCheckConfig cfg;
  cfg.trials = 1;
  const auto rep = run_gradcheck(cfg);
  std::vector<std::string> names;
  for (const auto &c : rep.cases) names.push_back(c.name);
  for (const char *want : {"affine", "activation.relu", "activation.sigmoid", "activation.softplus",
                           "conv1d", "avg_pool1d", "concat", "reshape", "gaussian_nll", "mean",
                           "model.fn", "model.cfn", "model.fn2", "model.cfn2", "mlp"})
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
}

TEST(GradCheck, DetectsWrongGradient) {
  // a build whose value and recorded gradient disagree must be caught
  Param x(0, "x", Tensor::vector({0.7, -0.3}));
  const auto [err, n] = compare_grads(
      {&x},
      [&](Tape &t) {
        const NodeId l = t.squared_error(t.param(x), std::vector<double>{0.0, 0.0});
        if (!t.value(l).empty() && x.grad[0] == 0.0) x.grad[0] += 1.0;  // corrupt once
        return l;
      },
      1e-6, 1e-3);
  EXPECT_EQ(n, 2u);
  EXPECT_GT(err, 1e-2);
}

TEST(GradCheck, ReportJson) {
  GradCheckConfig cfg;
  cfg.trials = 1;
  const auto j = run_gradcheck(cfg).to_json();
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["tolerance"].get<double>(), 1e-5);
}
