#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forecastnet/baselines.hpp"
#include "forecastnet/data.hpp"
#include "forecastnet/metrics.hpp"
#include "forecastnet/model.hpp"
#include "forecastnet/synth.hpp"
#include "forecastnet/trainer.hpp"

namespace forecastnet {

using AnyNet = std::variant<Model, Mlp>;

inline const std::vector<std::string> &model_names() {
  static const std::vector<std::string> names = {"fn", "cfn", "fn2", "cfn2", "mlp"};
  return names;
}

inline AnyNet make_net(const std::string &name, std::size_t tau, std::uint64_t seed) {
  if (name == "mlp") return build_mlp(tau, seed);
  return Model::build(ModelSpec::make(variant_from_string(name), tau, 24, seed));
}

// Scaled, windowed view of one series: scaler fitted on the training segment.
struct Prepared {
  Series train, test;
  ScaleParams scaler;
  std::vector<WindowSample> train_windows;  // scaled
  std::vector<WindowSample> test_windows;   // scaled
  std::size_t tau = 0;
};

inline Prepared prepare(const Series &s, std::size_t tau) {
  if (tau == 0) throw ArgumentError("tau must be >= 1");
  Series work = s;
  work.tau = tau;
  Prepared p;
  p.tau = tau;
  std::tie(p.train, p.test) = split(work);
  p.scaler = fit_scaler(p.train);
  p.train_windows = window(p.scaler.apply(p.train.values), tau);
  p.test_windows = window(p.scaler.apply(p.test.values), tau);
  return p;
}

// Same split and windows, scaled by a previously fitted scaler.
inline Prepared prepare(const Series &s, std::size_t tau, const ScaleParams &scaler) {
  Prepared p = prepare(s, tau);
  p.scaler = scaler;
  p.train_windows = window(scaler.apply(p.train.values), tau);
  p.test_windows = window(scaler.apply(p.test.values), tau);
  return p;
}

inline Tensor forecast_scaled(const Model &m, std::span<const double> x, PredictMode mode,
                              Rng *rng) {
  return m.predict(x, mode, rng).point;
}
inline Tensor forecast_scaled(const Mlp &m, std::span<const double> x, PredictMode, Rng *) {
  return m.predict(x);
}
inline Tensor forecast_scaled(const AnyNet &net, std::span<const double> x,
                              PredictMode mode, Rng *rng) {
  return std::visit([&](const auto &n) { return forecast_scaled(n, x, mode, rng); }, net);
}

struct Evaluation {
  std::vector<std::vector<double>> forecasts;  // data units
  std::vector<std::vector<double>> targets;    // data units
  MetricsReport report;
};

// Forecasts every test window and scores it in data units against the
// training segment's naive scale.
template <class Predict>
Evaluation evaluate_with(const Prepared &p, Predict &&predict) {
  Evaluation ev;
  for (const auto &w : p.test_windows) {
    ev.forecasts.push_back(p.scaler.invert(predict(w.input.data()).data()));
    ev.targets.push_back(p.scaler.invert(w.target.data()));
  }
  ev.report = evaluate_forecasts(ev.forecasts, ev.targets, p.train.values);
  return ev;
}

template <class Net>
Evaluation evaluate_net(const Net &net, const Prepared &p, PredictMode mode = PredictMode::mean,
                        std::uint64_t seed = 0) {
  Rng rng(seed);
  return evaluate_with(p, [&](std::span<const double> x) {
    return forecast_scaled(net, x, mode, &rng);
  });
}

inline Evaluation evaluate_seasonal_naive(const Prepared &p) {
  return evaluate_with(p, [&](std::span<const double> x) { return seasonal_naive(x, p.tau); });
}

struct RunConfig {
  TrainConfig train;
  bool search = true;  // false: train once at train.learning_rate
  PredictMode mode = PredictMode::mean;
};

struct PipelineResult {
  std::string model;
  AnyNet net;
  double lr = 0.0;
  TrainHistory history;
  std::vector<LrOutcome> outcomes;
  Evaluation eval;
};

// scale -> window -> split -> (lr search) -> train -> evaluate
inline PipelineResult run_pipeline(const std::string &model, const Prepared &p,
                                   const RunConfig &cfg) {
  const std::uint64_t seed = cfg.train.seed;
  return std::visit(
      [&](auto proto) -> PipelineResult {
        using Net = decltype(proto);
        auto factory = [&] { return std::get<Net>(make_net(model, p.tau, seed)); };
        PipelineResult r{model, std::move(proto), cfg.train.learning_rate, {}, {}, {}};
        if (cfg.search) {
          auto s = lr_search(factory, p.train_windows, cfg.train);
          r.lr = s.best_lr;
          r.history = std::move(s.history);
          r.outcomes = std::move(s.outcomes);
          r.net = std::move(s.net);
        } else {
          Net net = factory();
          r.history = train(net, p.train_windows, cfg.train);
          r.outcomes.push_back({r.lr, r.history.best_val_loss, r.history.diverged,
                                r.history.epochs()});
          r.net = std::move(net);
        }
        r.eval = evaluate_net(std::get<Net>(r.net), p, cfg.mode, seed);
        return r;
      },
      make_net(model, p.tau, seed));
}

inline nlohmann::json outcomes_json(const std::vector<LrOutcome> &outs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto &o : outs)
    j.push_back({{"lr", o.lr},
                 {"best_val_loss", std::isfinite(o.best_val_loss) ? nlohmann::json(o.best_val_loss)
                                                                  : nlohmann::json(nullptr)},
                 {"diverged", o.diverged},
                 {"epochs", o.epochs}});
  return j;
}

// Metrics of one pipeline run; contains no wall times.
inline nlohmann::json result_json(const PipelineResult &r) {
  return {{"model", r.model},
          {"lr", r.lr},
          {"epochs", r.history.epochs()},
          {"best_epoch", r.history.best_epoch},
          {"best_val_loss", r.history.best_val_loss},
          {"lr_outcomes", outcomes_json(r.outcomes)},
          {"test", r.eval.report.to_json()}};
}

inline std::string encode_net(const AnyNet &net, const nlohmann::json &extra) {
  return std::visit(
      [&](const auto &n) -> std::string {
        if constexpr (std::is_same_v<std::decay_t<decltype(n)>, Model>)
          return encode_model(n, extra);
        else
          return encode_mlp(n, extra);
      },
      net);
}

struct LoadedNet {
  AnyNet net;
  nlohmann::json header;
};

inline LoadedNet load_any(const std::string &path) {
  auto c = checkpoint::decode(checkpoint::read_file(path));
  const std::string kind = c.header.value("kind", "");
  if (kind == "forecastnet") return {model_from_checkpoint(c), c.header};
  if (kind == "mlp") return {mlp_from_checkpoint(c), c.header};
  throw FormatError("checkpoint '" + path + "' has unknown kind '" + kind + "'");
}

inline std::size_t net_tau(const AnyNet &net) {
  return std::visit([](const auto &n) { return n.n_outputs(); }, net);
}

// ---- run-directory helpers ----

inline void ensure_dir(const std::string &dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IngestionError("cannot create directory '" + dir + "': " + ec.message());
}

inline void write_text(const std::string &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IngestionError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw IngestionError("write failed for '" + path + "'");
}

inline void write_json(const std::string &path, const nlohmann::json &j) {
  write_text(path, j.dump(2) + "\n");
}

inline std::string join(const std::string &dir, const std::string &name) {
  return (std::filesystem::path(dir) / name).string();
}

// ---- experiments ----

struct ExperimentOptions {
  std::string out_dir;            // empty: no artifacts
  std::uint64_t seed = 0;
  // Desk budget: early stopping tolerates the noisy validation curve of a
  // noiseless target instead of stopping at the first plateau.
  std::size_t max_epochs = 400;   // dense models and the MLP
  std::size_t patience = 20;
  double min_delta = 0.0;
  std::size_t conv_max_epochs = 5;
  double conv_lr = 1e-3;          // conv models skip the lr search
  bool search = true;
  std::vector<std::string> models;    // empty: experiment default
  std::vector<std::string> datasets;  // table3: CSV paths; empty: synthetic
  std::size_t tau = 0;                // table3 datasets without a sidecar tau
  std::size_t epochs = 10;            // timing
  std::size_t length = 4320;          // synthetic length

  nlohmann::json to_json() const {
    return {{"out_dir", out_dir},   {"seed", seed},
            {"max_epochs", max_epochs}, {"patience", patience},
            {"min_delta", min_delta},  {"conv_max_epochs", conv_max_epochs},
            {"conv_lr", conv_lr},   {"search", search},
            {"models", models},     {"datasets", datasets},
            {"tau", tau},           {"epochs", epochs},
            {"length", length}};
  }
};

inline bool is_conv(const std::string &model) { return model == "cfn" || model == "cfn2"; }

inline RunConfig run_config_for(const std::string &model, const ExperimentOptions &o) {
  RunConfig rc;
  rc.train.seed = o.seed;
  rc.train.max_epochs = o.max_epochs;
  rc.train.patience = o.patience;
  rc.train.min_delta = o.min_delta;
  rc.search = o.search;
  if (is_conv(model)) {
    rc.train.max_epochs = o.conv_max_epochs;
    rc.train.learning_rate = o.conv_lr;
    rc.search = false;
  }
  return rc;
}

struct VanishingGradientResult {
  TrainHistory mlp;
  TrainHistory interleaved;
};

// 40 inputs, 20 sigmoid hidden layers of 24 units, 20 outputs; the deep MLP
// puts all outputs after the last layer, the interleaved model after each.
inline VanishingGradientResult run_vanishing_gradient(const ExperimentOptions &o) {
  constexpr std::size_t tau = 20, depth = 20, width = 24, epochs = 10;
  SynthConfig sc;
  sc.length = o.length;
  const Prepared p = prepare(gen_baseline(sc), tau);

  TrainConfig tc;
  tc.learning_rate = 1e-4;
  tc.max_epochs = epochs;
  tc.patience = epochs;  // fixed budget, no early stop
  tc.seed = o.seed;

  MlpSpec ms;
  ms.n_inputs = 2 * tau;
  ms.hidden.assign(depth, width);
  ms.n_outputs = tau;
  ms.activation = Activation::sigmoid;
  ms.init = InitScheme::xavier_normal;
  ms.seed = o.seed;
  Mlp mlp = Mlp::build(ms);

  ModelSpec fs = ModelSpec::make(Variant::fn2, tau, width, o.seed);
  fs.dense_layers = 1;
  fs.activation = Activation::sigmoid;
  fs.init = InitScheme::xavier_normal;
  Model fn = Model::build(fs);

  VanishingGradientResult r;
  r.mlp = train(mlp, p.train_windows, tc);
  r.interleaved = train(fn, p.train_windows, tc);

  if (!o.out_dir.empty()) {
    ensure_dir(o.out_dir);
    write_text(join(o.out_dir, "history_mlp.csv"), r.mlp.to_csv());
    write_text(join(o.out_dir, "history_forecastnet.csv"), r.interleaved.to_csv());
    std::ostringstream g;
    g << "epoch,mlp_first,mlp_last,forecastnet_first,forecastnet_last\n";
    for (std::size_t e = 0; e < r.mlp.epochs() && e < r.interleaved.epochs(); ++e)
      g << e + 1 << ',' << format_double(r.mlp.grad_first[e]) << ','
        << format_double(r.mlp.grad_last[e]) << ','
        << format_double(r.interleaved.grad_first[e]) << ','
        << format_double(r.interleaved.grad_last[e]) << '\n';
    write_text(join(o.out_dir, "gradients.csv"), g.str());
    write_json(join(o.out_dir, "metrics.json"),
               {{"mlp_final_train_loss", r.mlp.train_loss.back()},
                {"forecastnet_final_train_loss", r.interleaved.train_loss.back()},
                {"mlp_grad_first", r.mlp.grad_first},
                {"forecastnet_grad_first", r.interleaved.grad_first}});
    write_json(join(o.out_dir, "config.json"),
               {{"experiment", "vanishing-gradient"},
                {"options", o.to_json()},
                {"train", tc.to_json()},
                {"mlp", ms.to_json()},
                {"forecastnet", fs.to_json()}});
  }
  return r;
}

inline const std::vector<std::size_t> &time_variance_starts() {
  static const std::vector<std::size_t> s = {0, 50, 150, 200};
  return s;
}

struct TimeVarianceResult {
  std::vector<PipelineResult> runs;
  Evaluation naive;
  // start index -> model -> forecast (data units); "target" holds the truth
  std::map<std::size_t, std::map<std::string, std::vector<double>>> forecasts;

  const PipelineResult &run(const std::string &model) const {
    for (const auto &r : runs)
      if (r.model == model) return r;
    throw ArgumentError("no run for model '" + model + "'");
  }
};

inline TimeVarianceResult run_time_variance(const ExperimentOptions &o) {
  constexpr std::size_t tau = 20;
  SynthConfig sc;
  sc.length = o.length;
  sc.variant = SynthVariant::modulated;
  const Prepared p = prepare(gen_modulated(sc), tau);
  const std::vector<std::string> models =
      o.models.empty() ? std::vector<std::string>{"fn2", "cfn2", "mlp"} : o.models;

  TimeVarianceResult r;
  for (const auto &m : models) r.runs.push_back(run_pipeline(m, p, run_config_for(m, o)));
  r.naive = evaluate_seasonal_naive(p);

  for (std::size_t s : time_variance_starts()) {
    if (s >= p.test_windows.size())
      throw DimensionError("test segment too short for start index " + std::to_string(s));
    r.forecasts[s]["target"] = r.naive.targets[s];
    r.forecasts[s]["seasonal_naive"] = r.naive.forecasts[s];
    for (const auto &run : r.runs) r.forecasts[s][run.model] = run.eval.forecasts[s];
  }

  if (!o.out_dir.empty()) {
    ensure_dir(o.out_dir);
    nlohmann::json metrics;
    nlohmann::json cfgs;
    for (const auto &run : r.runs) {
      write_text(join(o.out_dir, "history_" + run.model + ".csv"), run.history.to_csv());
      metrics["models"][run.model] = result_json(run);
      cfgs[run.model] = run_config_for(run.model, o).train.to_json();
    }
    metrics["models"]["seasonal_naive"] = {{"test", r.naive.report.to_json()}};
    metrics["start_indices"] = time_variance_starts();
    write_json(join(o.out_dir, "metrics.json"), metrics);
    for (const auto &[s, cols] : r.forecasts) {
      std::ostringstream f;
      f << "step";
      for (const auto &[name, v] : cols) f << ',' << name;
      f << '\n';
      for (std::size_t h = 0; h < tau; ++h) {
        f << h + 1;
        for (const auto &[name, v] : cols) f << ',' << format_double(v[h]);
        f << '\n';
      }
      write_text(join(o.out_dir, "forecasts_" + std::to_string(s) + ".csv"), f.str());
    }
    write_json(join(o.out_dir, "config.json"),
               {{"experiment", "time-variance"},
                {"options", o.to_json()},
                {"dataset", {{"variant", "modulated"}, {"length", sc.length},
                             {"frequency", sc.frequency}, {"tau", tau}}},
                {"train", cfgs}});
  }
  return r;
}

struct TimingRow {
  std::string model;
  double mean_epoch_seconds = 0.0;
  double ratio = 0.0;  // relative to the MLP
};

// Mean epoch wall time per model over a fixed epoch budget, divided by the
// MLP's. Every model runs at lr 1e-3 without early stopping.
inline std::vector<TimingRow> run_timing(const ExperimentOptions &o) {
  constexpr std::size_t tau = 20;
  std::vector<std::string> models =
      o.models.empty() ? model_names() : o.models;
  if (std::find(models.begin(), models.end(), "mlp") == models.end())
    throw ArgumentError("timing: the roster must include mlp");
  if (o.epochs < 1) throw ArgumentError("timing: epochs must be >= 1");
  SynthConfig sc;
  sc.length = o.length;
  const Prepared p = prepare(gen_baseline(sc), tau);

  RunConfig rc;
  rc.search = false;
  rc.train.seed = o.seed;
  rc.train.learning_rate = 1e-3;
  rc.train.max_epochs = o.epochs;
  rc.train.patience = o.epochs;

  std::vector<TimingRow> rows;
  double mlp_time = 0.0;
  for (const auto &m : models) {
    const auto r = run_pipeline(m, p, rc);
    const auto &s = r.history.seconds;
    TimingRow row{m, std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size())};
    if (m == "mlp") mlp_time = row.mean_epoch_seconds;
    rows.push_back(row);
    if (!o.out_dir.empty()) {
      ensure_dir(o.out_dir);
      write_text(join(o.out_dir, "history_" + m + ".csv"), r.history.to_csv());
    }
  }
  for (auto &row : rows) row.ratio = row.mean_epoch_seconds / mlp_time;

  if (!o.out_dir.empty()) {
    std::ostringstream t;
    t << "model,mean_epoch_seconds,ratio\n";
    nlohmann::json metrics;
    for (const auto &row : rows) {
      t << row.model << ',' << format_double(row.mean_epoch_seconds) << ','
        << format_double(row.ratio) << '\n';
      metrics["ratio"][row.model] = row.ratio;
    }
    write_text(join(o.out_dir, "timing.csv"), t.str());
    write_json(join(o.out_dir, "metrics.json"), metrics);
    write_json(join(o.out_dir, "config.json"),
               {{"experiment", "timing"}, {"options", o.to_json()},
                {"train", rc.train.to_json()}});
  }
  return rows;
}

struct Table3Result {
  std::vector<std::string> datasets;
  std::vector<std::string> models;
  std::vector<std::vector<double>> mase;   // [dataset][model]
  std::vector<std::vector<double>> smape;  // [dataset][model]
  std::vector<double> borda;
};

// Desk-scale comparison: full pipeline per (model, dataset), then Borda on MASE.
inline Table3Result run_table3_desk(const ExperimentOptions &o) {
  Table3Result r;
  r.models = o.models.empty() ? model_names() : o.models;
  std::vector<Series> data;
  if (o.datasets.empty()) {
    SynthConfig sc;
    sc.length = o.length;
    data.push_back(gen_baseline(sc));
  } else {
    for (const auto &path : o.datasets) data.push_back(load_csv(path));
  }
  nlohmann::json metrics, cfgs;
  for (const auto &s : data) {
    const std::size_t tau = s.tau ? s.tau : o.tau;
    if (tau == 0) throw ArgumentError("dataset '" + s.name + "' declares no tau");
    r.datasets.push_back(s.name);
    const Prepared p = prepare(s, tau);
    std::vector<double> mrow, srow;
    const std::string dir = o.out_dir.empty() ? "" : join(o.out_dir, s.name);
    for (const auto &m : r.models) {
      PipelineResult run;
      try {
        run = run_pipeline(m, p, run_config_for(m, o));
      } catch (const std::exception &e) {
        throw std::runtime_error("table3 (" + m + ", " + s.name + "): " + e.what());
      }
      mrow.push_back(run.eval.report.mean_mase);
      srow.push_back(run.eval.report.mean_smape);
      if (!dir.empty()) {
        ensure_dir(dir);
        write_text(join(dir, "history_" + m + ".csv"), run.history.to_csv());
        metrics["datasets"][s.name][m] = result_json(run);
        cfgs[m] = run_config_for(m, o).train.to_json();
      }
    }
    r.mase.push_back(std::move(mrow));
    r.smape.push_back(std::move(srow));
  }
  r.borda = borda(r.mase);
  if (!o.out_dir.empty()) {
    for (std::size_t k = 0; k < r.models.size(); ++k) metrics["borda"][r.models[k]] = r.borda[k];
    write_json(join(o.out_dir, "metrics.json"), metrics);
    write_json(join(o.out_dir, "config.json"),
               {{"experiment", "table3"}, {"options", o.to_json()}, {"train", cfgs}});
  }
  return r;
}

}  // namespace forecastnet
