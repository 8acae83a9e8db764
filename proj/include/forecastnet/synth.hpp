#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "forecastnet/data.hpp"
#include "forecastnet/errors.hpp"

namespace forecastnet {

enum class SynthVariant { baseline, modulated };

inline SynthVariant synth_variant_from_string(const std::string &s) {
  if (s == "baseline") return SynthVariant::baseline;
  if (s == "modulated") return SynthVariant::modulated;
  throw ArgumentError("unknown synthetic variant '" + s + "'");
}

struct SynthConfig {
  std::size_t length = 4320;
  double frequency = 1.0 / 20.0;
  SynthVariant variant = SynthVariant::baseline;

  void validate() const {
    if (length < 1) throw ArgumentError("synthetic length must be >= 1");
    if (!(frequency > 0.0)) throw ArgumentError("synthetic frequency must be > 0");
  }
  std::size_t period() const {
    return static_cast<std::size_t>(std::llround(1.0 / frequency));
  }
};

// x_t = 2 sin(2 pi f t) + 1/3 sin(2 pi f t / 5)
inline Series gen_baseline(SynthConfig cfg) {
  cfg.validate();
  Series s;
  s.name = "synthetic";
  s.tau = cfg.period();
  s.values.resize(cfg.length);
  const double w = 2.0 * std::numbers::pi * cfg.frequency;
  for (std::size_t t = 0; t < cfg.length; ++t) {
    const double tt = static_cast<double>(t);
    s.values[t] = 2.0 * std::sin(w * tt) + std::sin(w * tt / 5.0) / 3.0;
  }
  return s;
}

// x_t = 1/2 sin(2 pi f t / 6) (3/5 sin(2 pi f t) + 1/5 sin(2 pi f t / 5)):
// the seasonal signal with an envelope repeating every six seasonal cycles.
inline Series gen_modulated(SynthConfig cfg) {
  cfg.validate();
  Series s;
  s.name = "synthetic-modulated";
  s.tau = cfg.period();
  s.values.resize(cfg.length);
  const double w = 2.0 * std::numbers::pi * cfg.frequency;
  for (std::size_t t = 0; t < cfg.length; ++t) {
    const double tt = static_cast<double>(t);
    s.values[t] = 0.5 * std::sin(w * tt / 6.0) *
                  (0.6 * std::sin(w * tt) + 0.2 * std::sin(w * tt / 5.0));
  }
  return s;
}

inline Series generate(const SynthConfig &cfg) {
  return cfg.variant == SynthVariant::baseline ? gen_baseline(cfg) : gen_modulated(cfg);
}

}  // namespace forecastnet
