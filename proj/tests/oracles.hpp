#pragma once

// Independent reference implementations and reference numbers used by the
// unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace oracle {

// Straight loops, no shared helpers with the library.
inline double mase(const std::vector<double> &f, const std::vector<double> &a,
                   const std::vector<double> &insample) {
  double num = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) num += std::fabs(a[i] - f[i]);
  num /= static_cast<double>(f.size());
  double den = 0.0;
  for (std::size_t t = 1; t < insample.size(); ++t) den += std::fabs(insample[t] - insample[t - 1]);
  den /= static_cast<double>(insample.size() - 1);
  return num / den;
}

inline double smape(const std::vector<double> &f, const std::vector<double> &a) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = std::fabs(a[i]) + std::fabs(f[i]);
    if (d > 0.0) s += 2.0 * std::fabs(f[i] - a[i]) / d;
  }
  return 100.0 * s / static_cast<double>(f.size());
}

// Pairwise points: M minus one per strictly better model, minus one half per
// tied model.
inline std::vector<double> borda(const std::vector<std::vector<double>> &err) {
  const std::size_t m = err.front().size();
  std::vector<double> pts(m, 0.0);
  for (const auto &row : err)
    for (std::size_t i = 0; i < m; ++i) {
      double p = static_cast<double>(m);
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        if (row[j] < row[i]) p -= 1.0;
        else if (row[j] == row[i]) p -= 0.5;
      }
      pts[i] += p;
    }
  return pts;
}

// Sort, then interpolate at p * (n - 1).
inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const double lo = std::floor(h);
  const double hi = std::ceil(h);
  return v[static_cast<std::size_t>(lo)] +
         (h - lo) * (v[static_cast<std::size_t>(hi)] - v[static_cast<std::size_t>(lo)]);
}

// Reference average MASE per dataset (rows) and model (columns).
inline const std::vector<std::string> &table3_models() {
  static const std::vector<std::string> m = {"FN",  "cFN", "FN2", "cFN2", "deepAR", "Seq2Seq",
                                             "Attention", "TCN", "MLP", "DLM", "SARIMA"};
  return m;
}

inline const std::vector<std::vector<double>> &table3_mase() {
  static const std::vector<std::vector<double>> t = {
      {0.00, 0.01, 0.00, 0.00, 0.03, 0.01, 0.04, 0.05, 0.01, 0.64, 0.29},  // Synth
      {0.46, 0.40, 0.46, 0.31, 0.46, 0.43, 0.37, 0.47, 0.47, 0.52, 0.61},  // Weather
      {1.12, 1.04, 0.89, 0.54, 1.77, 1.00, 1.39, 1.09, 1.34, 1.73, 1.26},  // Electricity
      {0.71, 0.66, 0.66, 0.39, 0.86, 0.57, 0.53, 0.85, 0.85, 0.77, 0.87},  // River
      {2.23, 1.95, 1.44, 0.82, 2.01, 1.78, 1.94, 2.20, 2.36, 2.40, 2.32},  // Traffic
      {1.42, 1.61, 1.58, 1.69, 1.61, 1.73, 1.56, 2.03, 1.57, 1.95, 1.69},  // Lake
      {0.54, 0.62, 0.62, 0.54, 0.71, 0.73, 2.11, 0.78, 0.77, 0.77, 0.64},  // DO
      {1.41, 1.23, 1.26, 1.01, 2.64, 1.70, 1.42, 1.35, 1.90, 1.29, 1.68},  // pH
      {1.90, 1.90, 1.66, 2.00, 1.95, 2.13, 2.23, 3.18, 2.10, 3.67, 1.64},  // Temp
      {0.72, 0.78, 0.69, 0.79, 1.03, 1.50, 0.58, 0.69, 0.66, 0.76, 0.89},  // Ozone
  };
  return t;
}

inline const std::vector<double> &table3_borda() {
  static const std::vector<double> b = {74, 76, 90, 90, 43, 57, 65, 42, 51, 31, 41};
  return b;
}

// Ranking of reference counts (descending, ties share a place) compared by order.
inline bool same_ordering(const std::vector<double> &a, const std::vector<double> &b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) {
      const int sa = (a[i] > a[j]) - (a[i] < a[j]);
      const int sb = (b[i] > b[j]) - (b[i] < b[j]);
      if (sa != sb) return false;
    }
  return true;
}

}  // namespace oracle
