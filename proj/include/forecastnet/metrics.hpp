#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forecastnet/errors.hpp"

namespace forecastnet {

// Mean absolute one-step naive error over an in-sample series.
inline double naive_scale(std::span<const double> insample) {
  if (insample.size() < 2) throw MetricError("MASE: in-sample series needs >= 2 points");
  double acc = 0.0;
  for (std::size_t t = 1; t < insample.size(); ++t)
    acc += std::abs(insample[t] - insample[t - 1]);
  const double scale = acc / static_cast<double>(insample.size() - 1);
  if (!(scale > 0.0)) throw MetricError("MASE: constant in-sample series (zero scale)");
  return scale;
}

inline double mase_scaled(std::span<const double> forecast,
                          std::span<const double> target, double scale) {
  if (forecast.size() != target.size() || forecast.empty())
    throw DimensionError("MASE: forecast and target lengths differ or are empty");
  double acc = 0.0;
  for (std::size_t h = 0; h < forecast.size(); ++h)
    acc += std::abs(target[h] - forecast[h]);
  return acc / static_cast<double>(forecast.size()) / scale;
}

inline double mase(std::span<const double> forecast, std::span<const double> target,
                   std::span<const double> insample) {
  return mase_scaled(forecast, target, naive_scale(insample));
}

struct SmapeResult {
  double value = 0.0;             // percent, in [0, 200]
  std::size_t degenerate_terms = 0;  // 0/0 steps counted as zero error
};

inline SmapeResult smape_detail(std::span<const double> forecast,
                                std::span<const double> target) {
  if (forecast.size() != target.size() || forecast.empty())
    throw DimensionError("SMAPE: forecast and target lengths differ or are empty");
  SmapeResult r;
  double acc = 0.0;
  for (std::size_t h = 0; h < forecast.size(); ++h) {
    const double denom = std::abs(target[h]) + std::abs(forecast[h]);
    if (denom == 0.0) {
      ++r.degenerate_terms;
      continue;
    }
    acc += 2.0 * std::abs(forecast[h] - target[h]) / denom;
  }
  r.value = 100.0 * acc / static_cast<double>(forecast.size());
  return r;
}

inline double smape(std::span<const double> forecast, std::span<const double> target) {
  return smape_detail(forecast, target).value;
}

// Borda points per model from a [dataset][model] error matrix: per dataset the
// lowest error earns M points and the highest 1; tied models share the mean of
// the points their ranks span.
inline std::vector<double> borda(const std::vector<std::vector<double>> &errors) {
  if (errors.empty() || errors.front().empty())
    throw ArgumentError("borda: empty error matrix");
  const std::size_t m = errors.front().size();
  std::vector<double> counts(m, 0.0);
  std::vector<std::size_t> order(m);
  for (const auto &row : errors) {
    if (row.size() != m) throw DimensionError("borda: ragged error matrix");
    for (double v : row)
      if (std::isnan(v)) throw ArgumentError("borda: NaN entry");
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    for (std::size_t i = 0; i < m;) {
      std::size_t j = i;
      while (j + 1 < m && row[order[j + 1]] == row[order[i]]) ++j;
      // ranks i..j (0-based) earn points m-i .. m-j
      const double pts = static_cast<double>(m) - 0.5 * static_cast<double>(i + j);
      for (std::size_t k = i; k <= j; ++k) counts[order[k]] += pts;
      i = j + 1;
    }
  }
  return counts;
}

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Five-number summary with linear interpolation between order statistics.
inline BoxStats boxplot_stats(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("boxplot_stats: empty input");
  std::sort(values.begin(), values.end());
  const auto q = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  return {values.front(), q(0.25), q(0.5), q(0.75), values.back()};
}

struct MetricsReport {
  std::vector<double> mase;
  std::vector<double> smape;
  double mean_mase = 0.0;
  double mean_smape = 0.0;
  std::size_t smape_degenerate_terms = 0;
  BoxStats mase_box;

  nlohmann::json to_json() const {
    return {{"forecasts", mase.size()},
            {"mean_mase", mean_mase},
            {"mean_smape", mean_smape},
            {"smape_degenerate_terms", smape_degenerate_terms},
            {"mase_box",
             {{"min", mase_box.min},
              {"q1", mase_box.q1},
              {"median", mase_box.median},
              {"q3", mase_box.q3},
              {"max", mase_box.max}}}};
  }
};

// Scores a set of forecasts (original units) against their targets; the MASE
// scale comes from `insample`, normally the training series.
inline MetricsReport evaluate_forecasts(const std::vector<std::vector<double>> &forecasts,
                                        const std::vector<std::vector<double>> &targets,
                                        std::span<const double> insample) {
  if (forecasts.size() != targets.size() || forecasts.empty())
    throw DimensionError("evaluate: forecast/target counts differ or are empty");
  const double scale = naive_scale(insample);
  MetricsReport r;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    r.mase.push_back(mase_scaled(forecasts[i], targets[i], scale));
    const auto s = smape_detail(forecasts[i], targets[i]);
    r.smape.push_back(s.value);
    r.smape_degenerate_terms += s.degenerate_terms;
  }
  const double n = static_cast<double>(forecasts.size());
  r.mean_mase = std::accumulate(r.mase.begin(), r.mase.end(), 0.0) / n;
  r.mean_smape = std::accumulate(r.smape.begin(), r.smape.end(), 0.0) / n;
  r.mase_box = boxplot_stats(r.mase);
  return r;
}

}  // namespace forecastnet
