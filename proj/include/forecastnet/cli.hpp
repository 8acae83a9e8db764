#pragma once

#include <cstdint>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "forecastnet/experiments.hpp"
#include "forecastnet/gradcheck.hpp"

namespace forecastnet::cli {

// "random" draws from the entropy source; anything else must be an integer.
inline std::uint64_t resolve_seed(const std::string &s) {
  if (s == "random") {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) | rd();
  }
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != s.size() || s.empty() || s[0] == '-')
    throw ArgumentError("--seed must be a non-negative integer or 'random', got '" + s + "'");
  return v;
}

inline std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline void check_model_name(const std::string &m) {
  for (const auto &n : model_names())
    if (n == m) return;
  throw ArgumentError("unknown model '" + m + "'");
}

// Every option the subcommand received, after defaults were applied.
inline nlohmann::json echo_flags(const CLI::App &sub) {
  nlohmann::json j = nlohmann::json::object();
  for (const CLI::Option *o : sub.get_options()) {
    const std::string key = o->get_single_name();
    if (key == "help") continue;
    const auto &results = o->results();
    if (o->get_expected_max() == 0) {  // flag
      j[key] = o->count() > 0;
    } else if (o->get_items_expected_max() > 1) {
      j[key] = results;
    } else {
      j[key] = results.empty() ? o->get_default_str() : results.front();
    }
  }
  return j;
}

struct Streams {
  std::ostream &out;
  std::ostream &err;
};

struct GenDataArgs {
  std::string variant = "baseline";
  std::size_t length = 4320;
  double frequency = 1.0 / 20.0;
  std::string out;
};

inline int cmd_gen_data(const GenDataArgs &a, const nlohmann::json &flags, Streams io) {
  SynthConfig sc;
  sc.variant = synth_variant_from_string(a.variant);
  sc.length = a.length;
  sc.frequency = a.frequency;
  const Series s = generate(sc);
  save_csv(s, a.out, false);
  write_json(a.out + ".json", {{"name", s.name},
                               {"resolution", s.resolution},
                               {"tau", s.tau},
                               {"generator", flags}});
  io.out << "wrote " << s.size() << " values to " << a.out << " (tau " << s.tau << ")\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::size_t tau = 0;
  std::string model = "fn2";
  std::string seed = "0";
  std::string out;
  std::size_t max_epochs = TrainConfig{}.max_epochs;
  std::size_t patience = TrainConfig{}.patience;
  double min_delta = TrainConfig{}.min_delta;
  std::size_t batch_size = TrainConfig{}.batch_size;
  double lr = 0.0;  // > 0 skips the search
  std::string mode = "mean";
};

inline int cmd_train(const TrainArgs &a, nlohmann::json flags, Streams io) {
  check_model_name(a.model);
  const std::uint64_t seed = resolve_seed(a.seed);
  io.out << "seed " << seed << '\n';
  flags["seed"] = std::to_string(seed);

  const Series s = load_csv(a.data);
  if (s.tau != 0 && s.tau != a.tau)
    io.err << "warning: --tau " << a.tau << " differs from the dataset's declared tau "
           << s.tau << '\n';

  RunConfig rc;
  rc.train.seed = seed;
  rc.train.max_epochs = a.max_epochs;
  rc.train.patience = a.patience;
  rc.train.min_delta = a.min_delta;
  rc.train.batch_size = a.batch_size;
  rc.mode = predict_mode_from_string(a.mode);
  if (a.lr > 0.0) {
    rc.search = false;
    rc.train.learning_rate = a.lr;
  }

  const Prepared p = prepare(s, a.tau);
  const PipelineResult r = run_pipeline(a.model, p, rc);

  ensure_dir(a.out);
  const nlohmann::json extra = {{"model", a.model},
                                {"tau", a.tau},
                                {"lr", r.lr},
                                {"scaler", p.scaler.to_json()},
                                {"dataset", s.name}};
  checkpoint::write_file(join(a.out, "model.ckpt"), encode_net(r.net, extra));
  write_text(join(a.out, "history_" + a.model + ".csv"), r.history.to_csv());
  write_json(join(a.out, "metrics.json"), result_json(r));
  write_json(join(a.out, "config.json"), {{"command", "train"},
                                          {"flags", flags},
                                          {"train", rc.train.to_json()},
                                          {"search", rc.search},
                                          {"mode", a.mode}});
  io.out << "model " << a.model << " lr " << r.lr << " epochs " << r.history.epochs()
         << " test MASE " << r.eval.report.mean_mase << " SMAPE "
         << r.eval.report.mean_smape << '\n';
  return 0;
}

inline ScaleParams stored_scaler(const nlohmann::json &header) {
  try {
    return ScaleParams::from_json(header.at("extra").at("scaler"));
  } catch (const nlohmann::json::exception &) {
    throw FormatError("checkpoint carries no scaler; was it written by `train`?");
  }
}

struct EvaluateArgs {
  std::string model_file;
  std::string data;
  std::string mode = "mean";
  std::string seed = "0";
  std::string out;
};

inline int cmd_evaluate(const EvaluateArgs &a, nlohmann::json flags, Streams io) {
  const std::uint64_t seed = resolve_seed(a.seed);
  flags["seed"] = std::to_string(seed);
  const LoadedNet ln = load_any(a.model_file);
  const Series s = load_csv(a.data);
  const Prepared p = prepare(s, net_tau(ln.net), stored_scaler(ln.header));
  const Evaluation ev = std::visit(
      [&](const auto &n) { return evaluate_net(n, p, predict_mode_from_string(a.mode), seed); },
      ln.net);
  const nlohmann::json metrics = {{"mode", a.mode}, {"seed", seed}, {"test", ev.report.to_json()}};
  io.out << metrics.dump(2) << '\n';
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_json(join(a.out, "metrics.json"), metrics);
    write_json(join(a.out, "config.json"), {{"command", "evaluate"}, {"flags", flags}});
  }
  return 0;
}

struct ForecastArgs {
  std::string model_file;
  std::string input_csv;
  std::string mode = "mean";
  std::string seed = "0";
  std::string out;
};

// Forecasts from the last 2*tau values of the input file (data units).
inline int cmd_forecast(const ForecastArgs &a, Streams io) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const LoadedNet ln = load_any(a.model_file);
  const ScaleParams sc = stored_scaler(ln.header);
  const std::size_t tau = net_tau(ln.net);
  const Series s = load_csv(a.input_csv);
  if (s.size() < 2 * tau)
    throw DimensionError("forecast needs at least " + std::to_string(2 * tau) +
                         " input values, got " + std::to_string(s.size()));
  const auto x = sc.apply(std::span<const double>(s.values).last(2 * tau));
  Rng rng(seed);
  const PredictMode mode = predict_mode_from_string(a.mode);
  std::ostringstream csv;
  csv << "step,forecast";
  if (const auto *m = std::get_if<Model>(&ln.net); m && m->spec().head_kind() == HeadKind::mixture) {
    const ForecastResult r = m->predict(x, mode, &rng);
    csv << ",sigma\n";
    for (std::size_t h = 0; h < tau; ++h)
      csv << h + 1 << ',' << format_double(sc.invert(r.point[h])) << ','
          << format_double((*r.sigma)[h] * (sc.max - sc.min)) << '\n';
  } else {
    const Tensor y = forecast_scaled(ln.net, x, mode, &rng);
    csv << '\n';
    for (std::size_t h = 0; h < tau; ++h)
      csv << h + 1 << ',' << format_double(sc.invert(y[h])) << '\n';
  }
  if (a.out.empty())
    io.out << csv.str();
  else
    write_text(a.out, csv.str());
  return 0;
}

inline int cmd_gradcheck(const GradCheckConfig &cfg, const std::string &out, Streams io) {
  const GradCheckReport rep = run_gradcheck(cfg);
  for (const auto &c : rep.cases)
    io.out << (c.pass ? "ok   " : "FAIL ") << c.name << "  trials " << c.trials
           << "  max rel error " << c.max_rel_error << '\n';
  io.out << (rep.pass() ? "gradcheck passed" : "gradcheck FAILED") << " (tolerance "
         << rep.tolerance << ")\n";
  if (!out.empty()) write_json(out, rep.to_json());
  return rep.pass() ? 0 : 1;
}

struct ExperimentArgs {
  std::string name;
  std::string seed = "0";
  std::string models;
  std::vector<std::string> data;
  bool no_search = false;
  ExperimentOptions opts;
};

inline int cmd_experiment(ExperimentArgs a, nlohmann::json flags, Streams io) {
  ExperimentOptions &o = a.opts;
  o.seed = resolve_seed(a.seed);
  io.out << "seed " << o.seed << '\n';
  flags["seed"] = std::to_string(o.seed);
  o.models = split_list(a.models);
  for (const auto &m : o.models) check_model_name(m);
  o.datasets = a.data;
  o.search = !a.no_search;
  if (o.out_dir.empty()) o.out_dir = "run_" + a.name;
  ensure_dir(o.out_dir);

  if (a.name == "vanishing-gradient") {
    const auto r = run_vanishing_gradient(o);
    io.out << "epoch  mlp_first  forecastnet_first\n";
    for (std::size_t e = 0; e < r.mlp.epochs(); ++e)
      io.out << e + 1 << "  " << r.mlp.grad_first[e] << "  " << r.interleaved.grad_first[e]
             << '\n';
  } else if (a.name == "time-variance") {
    const auto r = run_time_variance(o);
    for (const auto &run : r.runs)
      io.out << run.model << " test MASE " << run.eval.report.mean_mase << '\n';
    io.out << "seasonal_naive test MASE " << r.naive.report.mean_mase << '\n';
  } else if (a.name == "timing") {
    for (const auto &row : run_timing(o))
      io.out << row.model << " ratio " << row.ratio << '\n';
  } else if (a.name == "table3") {
    const auto r = run_table3_desk(o);
    for (std::size_t k = 0; k < r.models.size(); ++k)
      io.out << r.models[k] << " borda " << r.borda[k] << '\n';
  } else {
    throw ArgumentError("unknown experiment '" + a.name + "'");
  }
  // the runners write their own resolved config; keep the raw flags beside it
  write_json(join(o.out_dir, "flags.json"), flags);
  const std::string cfg_path = join(o.out_dir, "config.json");
  nlohmann::json cfg = nlohmann::json::parse(checkpoint::read_file(cfg_path));
  cfg["flags"] = flags;
  write_json(cfg_path, cfg);
  io.out << "artifacts in " << o.out_dir << '\n';
  return 0;
}

inline int dispatch(int argc, const char *const *argv, std::ostream &out = std::cout,
                    std::ostream &err = std::cerr) {
  Streams io{out, err};
  CLI::App app{"ForecastNet: time-variant multi-step forecasting"};
  app.require_subcommand(1);
  app.name("forecastnet");

  GenDataArgs gd;
  auto *gen = app.add_subcommand("gen-data", "write a synthetic series as CSV");
  gen->add_option("--variant", gd.variant, "baseline or modulated")
      ->check(CLI::IsMember({"baseline", "modulated"}))
      ->capture_default_str();
  gen->add_option("--length", gd.length, "number of points")->capture_default_str();
  gen->add_option("--frequency", gd.frequency, "base frequency f")->capture_default_str();
  gen->add_option("--out", gd.out, "output CSV path")->required();

  TrainArgs ta;
  auto *tr = app.add_subcommand("train", "scale, window, split, search, train, evaluate");
  tr->add_option("--data", ta.data, "series CSV")->required();
  tr->add_option("--tau", ta.tau, "seasonal period")->required()->check(CLI::PositiveNumber);
  tr->add_option("--model", ta.model, "fn|cfn|fn2|cfn2|mlp")
      ->check(CLI::IsMember(model_names()))
      ->capture_default_str();
  tr->add_option("--seed", ta.seed, "integer or 'random'")->capture_default_str();
  tr->add_option("--out", ta.out, "run directory")->required();
  tr->add_option("--max-epochs", ta.max_epochs)->capture_default_str();
  tr->add_option("--patience", ta.patience)->capture_default_str();
  tr->add_option("--min-delta", ta.min_delta)->capture_default_str();
  tr->add_option("--batch-size", ta.batch_size)->capture_default_str();
  tr->add_option("--lr", ta.lr, "fixed learning rate; skips the grid search")
      ->capture_default_str();
  tr->add_option("--mode", ta.mode, "evaluation mode")
      ->check(CLI::IsMember({"mean", "sample"}))
      ->capture_default_str();

  EvaluateArgs ea;
  auto *ev = app.add_subcommand("evaluate", "score a checkpoint on a series' test split");
  ev->add_option("--model-file", ea.model_file)->required();
  ev->add_option("--data", ea.data)->required();
  ev->add_option("--mode", ea.mode)->check(CLI::IsMember({"mean", "sample"}))->capture_default_str();
  ev->add_option("--seed", ea.seed)->capture_default_str();
  ev->add_option("--out", ea.out, "optional run directory")->capture_default_str();

  ForecastArgs fa;
  auto *fc = app.add_subcommand("forecast", "forecast tau steps after an input CSV");
  fc->add_option("--model-file", fa.model_file)->required();
  fc->add_option("--input-csv", fa.input_csv)->required();
  fc->add_option("--mode", fa.mode)->check(CLI::IsMember({"mean", "sample"}))->capture_default_str();
  fc->add_option("--seed", fa.seed)->capture_default_str();
  fc->add_option("--out", fa.out, "output CSV; stdout when omitted")->capture_default_str();

  GradCheckConfig gc;
  std::string gc_out;
  auto *gck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gck->add_option("--depth", gc.depth, "interleaved chain depth")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gck->add_option("--trials", gc.trials)->check(CLI::PositiveNumber)->capture_default_str();
  gck->add_option("--seed", gc.seed)->capture_default_str();
  gck->add_option("--out", gc_out, "optional JSON report")->capture_default_str();

  ExperimentArgs xa;
  auto *ex = app.add_subcommand("experiment", "run a scripted experiment");
  ex->add_option("name", xa.name)
      ->required()
      ->check(CLI::IsMember({"vanishing-gradient", "time-variance", "timing", "table3"}));
  ex->add_option("--out", xa.opts.out_dir, "run directory")->capture_default_str();
  ex->add_option("--seed", xa.seed)->capture_default_str();
  ex->add_option("--models", xa.models, "comma-separated roster")->capture_default_str();
  ex->add_option("--data", xa.data, "table3 dataset CSVs");
  ex->add_option("--tau", xa.opts.tau, "tau for datasets without a sidecar")->capture_default_str();
  ex->add_option("--max-epochs", xa.opts.max_epochs)->capture_default_str();
  ex->add_option("--patience", xa.opts.patience)->capture_default_str();
  ex->add_option("--min-delta", xa.opts.min_delta)->capture_default_str();
  ex->add_option("--conv-max-epochs", xa.opts.conv_max_epochs)->capture_default_str();
  ex->add_option("--conv-lr", xa.opts.conv_lr)->capture_default_str();
  ex->add_flag("--no-search", xa.no_search, "train at a fixed lr (1e-3)");
  ex->add_option("--epochs", xa.opts.epochs, "timing epochs")->capture_default_str();
  ex->add_option("--length", xa.opts.length, "synthetic length")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*gen) return cmd_gen_data(gd, echo_flags(*gen), io);
    if (*tr) return cmd_train(ta, echo_flags(*tr), io);
    if (*ev) return cmd_evaluate(ea, echo_flags(*ev), io);
    if (*fc) return cmd_forecast(fa, io);
    if (*gck) return cmd_gradcheck(gc, gc_out, io);
    if (*ex) return cmd_experiment(xa, echo_flags(*ex), io);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

inline int dispatch(const std::vector<std::string> &args, std::ostream &out = std::cout,
                    std::ostream &err = std::cerr) {
  std::vector<const char *> argv = {"forecastnet"};
  for (const auto &a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace forecastnet::cli
