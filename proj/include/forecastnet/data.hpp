#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "forecastnet/errors.hpp"
#include "forecastnet/tensor.hpp"

namespace forecastnet {

struct Series {
  std::vector<double> values;
  std::string name;
  std::string resolution;
  std::size_t tau = 0;  // seasonal period; 0 when unknown

  std::size_t size() const { return values.size(); }
};

struct ScaleParams {
  double min = 0.0;
  double max = 1.0;

  double apply(double x) const { return (x - min) / (max - min); }
  double invert(double s) const { return s * (max - min) + min; }

  std::vector<double> apply(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(),
                   [this](double x) { return apply(x); });
    return out;
  }
  std::vector<double> invert(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(),
                   [this](double x) { return invert(x); });
    return out;
  }

  nlohmann::json to_json() const { return {{"min", min}, {"max", max}}; }
  static ScaleParams from_json(const nlohmann::json &j) {
    return {j.at("min").get<double>(), j.at("max").get<double>()};
  }
};

// Min-max scaler fitted on one segment; apply it unchanged to later segments.
inline ScaleParams fit_scaler(std::span<const double> train) {
  if (train.empty()) throw ScalingError("cannot fit a scaler to an empty series");
  const auto [lo, hi] = std::minmax_element(train.begin(), train.end());
  if (!(*hi > *lo)) throw ScalingError("cannot scale a constant series");
  return {*lo, *hi};
}

inline ScaleParams fit_scaler(const Series &train) { return fit_scaler(train.values); }

// Input x_{t-2tau+1..t}, target x_{t+1..t+tau}; `origin` is t.
struct WindowSample {
  Tensor input;
  Tensor target;
  std::size_t origin = 0;
};

inline std::vector<WindowSample> window(std::span<const double> values,
                                        std::size_t tau) {
  if (tau == 0) throw DimensionError("window: tau must be >= 1");
  const std::size_t span_len = 3 * tau;
  if (values.size() < span_len)
    throw DimensionError("window: series of length " + std::to_string(values.size()) +
                         " is shorter than 3*tau = " + std::to_string(span_len));
  std::vector<WindowSample> out;
  out.reserve(values.size() - span_len + 1);
  for (std::size_t s = 0; s + span_len <= values.size(); ++s) {
    const auto in = values.subspan(s, 2 * tau);
    const auto tg = values.subspan(s + 2 * tau, tau);
    out.push_back({Tensor::vector(std::vector<double>(in.begin(), in.end())),
                   Tensor::vector(std::vector<double>(tg.begin(), tg.end())),
                   s + 2 * tau - 1});
  }
  return out;
}

inline std::vector<WindowSample> window(const Series &s) {
  return window(s.values, s.tau);
}

// Chronological split; the last `test_fraction` of points form the test set.
inline std::pair<Series, Series> split(const Series &series,
                                       double test_fraction = 0.10) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ArgumentError("split: test fraction must be in (0, 1)");
  const std::size_t n = series.size();
  const auto n_test = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * test_fraction + 1e-9));
  const std::size_t n_train = n - n_test;
  const std::size_t need = 3 * std::max<std::size_t>(series.tau, 1);
  if (n_test < need || n_train < need)
    throw DimensionError("split: segments of " + std::to_string(n_train) + "/" +
                         std::to_string(n_test) + " points cannot hold a " +
                         std::to_string(need) + "-point window");
  Series train = series, test = series;
  train.values.assign(series.values.begin(), series.values.begin() + n_train);
  test.values.assign(series.values.begin() + n_train, series.values.end());
  return {std::move(train), std::move(test)};
}

struct SeriesStats {
  std::size_t length = 0;
  double min = 0, max = 0, mean = 0, std = 0;
};

// Population statistics (N divisor).
inline SeriesStats series_stats(std::span<const double> v) {
  if (v.empty()) throw ArgumentError("series_stats: empty series");
  SeriesStats s;
  s.length = v.size();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  s.min = *lo;
  s.max = *hi;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / n);
  return s;
}

inline double round_to(double x, int decimals) {
  const double f = std::pow(10.0, decimals);
  const double r = std::round(x * f) / f;
  return r == 0.0 ? 0.0 : r;  // folds -0.0
}

inline SeriesStats rounded(SeriesStats s, int decimals = 2) {
  s.min = round_to(s.min, decimals);
  s.max = round_to(s.max, decimals);
  s.mean = round_to(s.mean, decimals);
  s.std = round_to(s.std, decimals);
  return s;
}

// CSV: header line `value`, then one number per line.
inline Series parse_csv(std::istream &in, const std::string &origin = "<stream>") {
  Series s;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<std::size_t> blanks;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      if (line != "value")
        throw IngestionError(origin + ":" + std::to_string(lineno) +
                             ": expected header 'value'");
      header = true;
      continue;
    }
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) {
      blanks.push_back(lineno);
      continue;
    }
    if (!blanks.empty())
      throw IngestionError(origin + ":" + std::to_string(blanks.front()) +
                           ": missing value (blank line)");
    const auto last = line.find_last_not_of(" \t");
    const char *b = line.data() + first;
    const char *e = line.data() + last + 1;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e)
      throw IngestionError(origin + ":" + std::to_string(lineno) +
                           ": cannot parse '" + std::string(b, e) + "'");
    if (!std::isfinite(v))
      throw IngestionError(origin + ":" + std::to_string(lineno) +
                           ": missing value (non-finite)");
    s.values.push_back(v);
  }
  if (!header) throw IngestionError(origin + ": empty file");
  return s;
}

inline Series load_csv(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw IngestionError("cannot open '" + path + "'");
  Series s = parse_csv(f, path);
  s.name = std::filesystem::path(path).stem().string();
  const std::string sidecar = path + ".json";
  if (std::filesystem::exists(sidecar)) {
    std::ifstream j(sidecar);
    try {
      const auto meta = nlohmann::json::parse(j);
      s.name = meta.value("name", s.name);
      s.resolution = meta.value("resolution", std::string());
      s.tau = meta.value("tau", std::size_t{0});
    } catch (const nlohmann::json::exception &e) {
      throw FormatError("bad sidecar '" + sidecar + "': " + e.what());
    }
  }
  return s;
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void save_csv(const Series &s, const std::string &path,
                     bool write_sidecar = true) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IngestionError("cannot open '" + path + "' for writing");
  f << "value\n";
  for (double v : s.values) f << format_double(v) << '\n';
  if (!f) throw IngestionError("write failed for '" + path + "'");
  if (write_sidecar) {
    std::ofstream j(path + ".json", std::ios::trunc);
    j << nlohmann::json{{"name", s.name}, {"resolution", s.resolution}, {"tau", s.tau}}
             .dump(2)
      << '\n';
  }
}

}  // namespace forecastnet
