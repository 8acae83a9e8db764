// Acceptance checks, one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "forecastnet/cli.hpp"
#include "../oracles.hpp"

using namespace forecastnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // wall-clock limit; part of the criterion
  std::function<Outcome()> check;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

double c4_seconds = 0.0;

Outcome synthetic_stats() {
  const auto s = rounded(series_stats(gen_baseline({}).values));
  const bool ok = s.length == 4320 && s.min == -2.33 && s.max == 2.33 && s.mean == 0.0 &&
                  s.std == 1.43;
  return {ok, "min " + fmt(s.min) + " max " + fmt(s.max) + " mean " + fmt(s.mean) + " std " +
                  fmt(s.std)};
}

Outcome gradient_oracles() {
  GradCheckConfig cfg;
  cfg.trials = 10;
  cfg.tolerance = 1e-5;
  const auto rep = run_gradcheck(cfg);
  double worst = 0.0;
  std::string failed;
  for (const auto &c : rep.cases) {
    worst = std::max(worst, c.max_rel_error);
    if (!c.pass) failed += " " + c.name;
  }
  const bool ok = rep.pass() && rep.trials() >= 100;
  return {ok, std::to_string(rep.cases.size()) + " cases, " + std::to_string(rep.trials()) +
                  " trials, worst rel error " + fmt(worst, 3) +
                  (failed.empty() ? "" : ", failed:" + failed)};
}

Outcome interleaved_chain_rule() {
  Rng rng(2024);
  double worst = 0.0;
  std::size_t chains = 0;
  for (std::size_t depth = 2; depth <= 40; ++depth)
    for (int trial = 0; trial < 25; ++trial) {
      const auto ch = InterleavedChain::random(depth, rng);
      worst = std::max(worst, max_relative_error(analytic_interleaved_grad(ch),
                                                 tape_interleaved_grad(ch)));
      ++chains;
    }
  return {worst < 1e-9, std::to_string(chains) + " chains, depth 2-40, worst rel error " +
                            fmt(worst, 3)};
}

Outcome synthetic_accuracy() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentOptions o;
  o.models = {"fn2"};
  const Table3Result r = run_table3_desk(o);
  c4_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double m = r.mase[0][0], s = r.smape[0][0];
  return {m <= 0.05 && s <= 5.0, "FN2 test MASE " + fmt(m) + " SMAPE " + fmt(s) + "%"};
}

Outcome vanishing_gradient() {
  ExperimentOptions o;
  const auto r = run_vanishing_gradient(o);
  bool below = r.mlp.epochs() == 10 && r.interleaved.epochs() == 10;
  bool ratio = below;
  double mlp_max = 0.0, fn_min = INFINITY;
  for (std::size_t e = 0; e < r.mlp.epochs() && e < r.interleaved.epochs(); ++e) {
    below &= r.mlp.grad_first[e] < 0.6e-4;
    ratio &= r.interleaved.grad_first[e] >= 10.0 * r.mlp.grad_first[e];
    mlp_max = std::max(mlp_max, r.mlp.grad_first[e]);
    fn_min = std::min(fn_min, r.interleaved.grad_first[e]);
  }
  const double lm = r.mlp.train_loss.back(), lf = r.interleaved.train_loss.back();
  return {below && ratio && lf < lm,
          "MLP first-layer |grad| max " + fmt(mlp_max, 3) + ", interleaved min " +
              fmt(fn_min, 3) + ", final train loss MLP " + fmt(lm) + " vs interleaved " +
              fmt(lf)};
}

Outcome time_variance() {
  ExperimentOptions o;
  o.models = {"fn2"};
  o.max_epochs = 100;
  const auto r = run_time_variance(o);
  const double fn2 = r.run("fn2").eval.report.mean_mase;
  const double naive = r.naive.report.mean_mase;
  return {fn2 < naive, "FN2 test MASE " + fmt(fn2) + " vs seasonal naive " + fmt(naive)};
}

Outcome metric_oracles() {
  Rng rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_int_distribution<int> len(1, 10), models(2, 8), sets(1, 6), coarse(0, 5);
  double worst_mase = 0.0, worst_smape = 0.0;
  int borda_mismatch = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto n = static_cast<std::size_t>(len(rng));
    std::vector<double> f(n), a(n), ins(static_cast<std::size_t>(len(rng)) + 1);
    for (double &x : f) x = u(rng);
    for (double &x : a) x = u(rng);
    for (double &x : ins) x = u(rng);
    worst_mase = std::max(worst_mase, std::abs(mase(f, a, ins) - oracle::mase(f, a, ins)));
    worst_smape = std::max(worst_smape, std::abs(smape(f, a) - oracle::smape(f, a)));
    std::vector<std::vector<double>> e(static_cast<std::size_t>(sets(rng)),
                                       std::vector<double>(static_cast<std::size_t>(models(rng))));
    for (auto &row : e)
      for (double &v : row) v = k % 2 ? 0.25 * coarse(rng) : u(rng);  // odd k: many ties
    if (borda(e) != oracle::borda(e)) ++borda_mismatch;
  }
  const auto pub = borda(oracle::table3_mase());
  const auto &want = oracle::table3_borda();
  const bool table_ok = pub[2] == 90.0 && pub[3] == 90.0 && oracle::same_ordering(pub, want);
  std::string counts;
  for (double c : pub) counts += (counts.empty() ? "" : " ") + fmt(c);
  std::string reference;
  for (double c : want) reference += (reference.empty() ? "" : " ") + fmt(c);
  return {worst_mase <= 1e-10 && worst_smape <= 1e-10 && borda_mismatch == 0 && table_ok,
          "1000 instances: MASE diff " + fmt(worst_mase, 2) + ", SMAPE diff " +
              fmt(worst_smape, 2) + ", Borda mismatches " + std::to_string(borda_mismatch) +
              "; reference matrix gives [" + counts + "] vs reference counts [" + reference + "]"};
}

Outcome determinism() {
  const fs::path d = fs::temp_directory_path() / "fcn_acceptance_determinism";
  fs::remove_all(d);
  fs::create_directories(d);
  const std::string csv = (d / "synthetic.csv").string();
  std::ostringstream sink;
  if (cli::dispatch({"gen-data", "--out", csv}, sink, sink) != 0)
    return {false, "gen-data failed: " + sink.str()};
  for (const char *run : {"a", "b"}) {
    const int code = cli::dispatch({"train", "--data", csv, "--tau", "20", "--model", "fn2",
                                    "--seed", "1234", "--max-epochs", "10", "--out",
                                    (d / run).string()},
                                   sink, sink);
    if (code != 0) return {false, "train failed: " + sink.str()};
  }
  bool same = true;
  std::string diff;
  for (const char *f : {"model.ckpt", "metrics.json"}) {
    const bool eq = checkpoint::read_file((d / "a" / f).string()) ==
                    checkpoint::read_file((d / "b" / f).string());
    if (!eq) diff += std::string(" ") + f;
    same &= eq;
  }
  return {same, same ? "model.ckpt and metrics.json bit-identical across two seeded runs"
                     : "differs:" + diff};
}

// Closed-form per-cell parameter count (cell plus its output head).
std::size_t expected_cell_params(Variant v, std::size_t tau, std::size_t cell) {
  const std::size_t h = 24, in = cell == 0 ? 2 * tau : 2 * tau + h + 1;
  std::size_t body;
  if (v == Variant::fn || v == Variant::fn2) {
    body = in * h + h + h * h + h;
  } else {
    const std::size_t len = std::max<std::size_t>(in, 5);
    body = h * 2 + h + h * h * 2 + h + h * (h * (len - 4)) + h;
  }
  const std::size_t head = (v == Variant::fn || v == Variant::cfn) ? 2 * (h + 1) : h + 1;
  return body + head;
}

Outcome structural_census() {
  std::size_t models = 0;
  for (Variant v : {Variant::fn, Variant::cfn, Variant::fn2, Variant::cfn2})
    for (std::size_t tau : {2, 12, 20, 24}) {
      const ParamCensus c = param_census(Model::build(ModelSpec::make(v, tau)));
      if (c.shared != 0)
        return {false, std::string(to_string(v)) + " tau " + std::to_string(tau) + " shares " +
                           std::to_string(c.shared) + " parameters"};
      if (c.per_cell.size() != tau)
        return {false, std::string(to_string(v)) + " has " + std::to_string(c.per_cell.size()) +
                           " cells for tau " + std::to_string(tau)};
      for (std::size_t i = 0; i < tau; ++i)
        if (c.per_cell[i] != expected_cell_params(v, tau, i))
          return {false, std::string(to_string(v)) + " tau " + std::to_string(tau) + " cell " +
                             std::to_string(i + 1) + ": " + std::to_string(c.per_cell[i]) +
                             " != " + std::to_string(expected_cell_params(v, tau, i))};
      ++models;
    }
  return {true, std::to_string(models) + " models, shared 0, per-cell counts match"};
}

}  // namespace

int main(int argc, char **argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "synthetic-stats", 1.0, synthetic_stats},
      {2, "gradient-oracles", 60.0, gradient_oracles},
      {3, "interleaved-chain-rule", 10.0, interleaved_chain_rule},
      {4, "synthetic-accuracy", 600.0, synthetic_accuracy},
      {5, "vanishing-gradient", 300.0, vanishing_gradient},
      {6, "time-variance", 600.0, time_variance},
      {7, "metric-oracles", 10.0, metric_oracles},
      {8, "determinism", 0.0, determinism},  // budget: 2x criterion 4
      {9, "structural-census", 1.0, structural_census},
  };

  int failures = 0;
  for (const auto &c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double budget = c.budget_s;
    if (c.id == 8) budget = c4_seconds > 0.0 ? 2.0 * c4_seconds : 1200.0;
    const bool in_time = secs <= budget;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::cout << (pass ? "PASS" : "FAIL") << "  C" << c.id << " " << c.name << "  ("
              << fmt(secs, 3) << " s, budget " << fmt(budget, 4) << " s"
              << (in_time ? "" : ", OVER BUDGET") << ")  " << o.detail << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : "all criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}
