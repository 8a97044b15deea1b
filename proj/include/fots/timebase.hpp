#pragma once

// Site clocks as time-error processes x(t) = x0 + y0*t + d*t^2/2 + noise(t).
//
// Noise is synthesized on a uniform grid with power-law shaping:
//   white_pm        amplitude = per-sample std of x [s]
//   flicker_pm      amplitude = stationary std of the flicker x process [s]
//   white_fm        amplitude = ADEV at 1 s [-]; x steps have std a*sqrt(tau0)
//   flicker_fm      amplitude = stationary std of the flicker y process [-]
//   random_walk_fm  amplitude = y diffusion [1/sqrt(s)]; y steps have std a*sqrt(tau0)
// Flicker components use a cascade of first-order relaxation sections with
// two corner frequencies per decade, which gives a 1/f spectrum across the
// covered band.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fots/errors.hpp"
#include "fots/random.hpp"

namespace fots {

enum class NoiseType { white_pm, flicker_pm, white_fm, flicker_fm, random_walk_fm };

inline std::string_view to_string(NoiseType t) {
  switch (t) {
    case NoiseType::white_pm: return "white_pm";
    case NoiseType::flicker_pm: return "flicker_pm";
    case NoiseType::white_fm: return "white_fm";
    case NoiseType::flicker_fm: return "flicker_fm";
    case NoiseType::random_walk_fm: return "random_walk_fm";
  }
  return "unknown";
}

inline NoiseType noise_type_from_string(std::string_view s) {
  for (auto t : {NoiseType::white_pm, NoiseType::flicker_pm, NoiseType::white_fm,
                 NoiseType::flicker_fm, NoiseType::random_walk_fm}) {
    if (to_string(t) == s) return t;
  }
  throw ValidationError("noise.type", "unknown noise type '" + std::string(s) + "'");
}

struct NoiseComponent {
  NoiseType type = NoiseType::white_pm;
  double amplitude = 0.0;
};

struct NoiseProfile {
  std::vector<NoiseComponent> components;  // empty = ideal clock
  std::uint64_t rng_seed = 0;

  void validate() const {
    for (const auto& c : components) {
      if (!std::isfinite(c.amplitude) || c.amplitude < 0.0) {
        throw ValidationError("noise." + std::string(to_string(c.type)),
                              "amplitude must be finite and >= 0");
      }
    }
  }

  std::string describe() const {
    if (components.empty()) return "ideal";
    std::string out;
    for (const auto& c : components) {
      if (!out.empty()) out += "+";
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s(%.6g)", std::string(to_string(c.type)).c_str(),
                    c.amplitude);
      out += buf;
    }
    return out;
  }
};

struct TimeErrorSeries {
  double tau0 = 1.0;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::string description;

  std::size_t size() const noexcept { return values.size(); }

  void validate() const {
    if (values.empty()) throw ValidationError("series", "must hold at least one sample");
    if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw ValidationError("tau0", "must be > 0");
    for (double v : values) {
      if (!std::isfinite(v)) throw ValidationError("series", "values must be finite");
    }
  }
};

namespace detail {

// Sum of unit-variance AR(1) sections with log-spaced time constants from
// tau0 up to `horizon`; normalized so the output has unit stationary variance.
class FlickerCascade {
 public:
  FlickerCascade(double tau0, double horizon, std::uint64_t seed) : rng_(seed) {
    const double decades = std::max(std::log10(horizon / tau0), 1.0);
    const int sections = static_cast<int>(std::ceil(2.0 * decades)) + 1;
    for (int j = 0; j < sections; ++j) {
      const double time_constant = tau0 * std::pow(10.0, 0.5 * j);
      const double rho = std::exp(-tau0 / time_constant);
      sections_.push_back({rho, std::sqrt(1.0 - rho * rho), 0.0});
    }
    // Start every section from its stationary distribution.
    for (auto& s : sections_) s.state = rng_.next();
    norm_ = 1.0 / std::sqrt(static_cast<double>(sections_.size()));
  }

  double next() {
    double sum = 0.0;
    for (auto& s : sections_) {
      s.state = s.rho * s.state + s.innovation * rng_.next();
      sum += s.state;
    }
    return sum * norm_;
  }

 private:
  struct Section {
    double rho;
    double innovation;
    double state;
  };
  std::vector<Section> sections_;
  GaussianStream rng_;
  double norm_ = 1.0;
};

}  // namespace detail

/// Streaming power-law time-error generator. Each component draws from its
/// own stream derived from the profile seed, so adding a component never
/// perturbs the realization of the others.
class NoiseSynthesizer {
 public:
  static constexpr double kFlickerHorizon = 1.0e5;  // seconds

  NoiseSynthesizer(const NoiseProfile& profile, double tau0) : tau0_(tau0) {
    profile.validate();
    if (!(tau0 > 0.0)) throw ValidationError("tau0", "must be > 0");
    std::uint64_t index = 0;
    for (const auto& c : profile.components) {
      const std::uint64_t seed =
          derive_seed(profile.rng_seed, "component/" + std::to_string(index++));
      parts_.push_back(Part{c, GaussianStream(seed), std::nullopt, 0.0, 0.0});
      if (c.type == NoiseType::flicker_pm || c.type == NoiseType::flicker_fm) {
        parts_.back().flicker.emplace(tau0, kFlickerHorizon, mix64(seed));
      }
    }
  }

  /// Time error of the next grid sample; the first call returns sample 0.
  double next() {
    double x = 0.0;
    for (auto& p : parts_) {
      const double a = p.component.amplitude;
      switch (p.component.type) {
        case NoiseType::white_pm:
          x += a * p.rng.next();
          break;
        case NoiseType::flicker_pm:
          x += a * p.flicker->next();
          break;
        case NoiseType::white_fm:
          x += p.phase;
          p.phase += a * std::sqrt(tau0_) * p.rng.next();
          break;
        case NoiseType::flicker_fm:
          x += p.phase;
          p.phase += a * p.flicker->next() * tau0_;
          break;
        case NoiseType::random_walk_fm:
          x += p.phase;
          p.phase += p.frequency * tau0_;
          p.frequency += a * std::sqrt(tau0_) * p.rng.next();
          break;
      }
    }
    return x;
  }

  double tau0() const noexcept { return tau0_; }

 private:
  struct Part {
    NoiseComponent component;
    GaussianStream rng;
    std::optional<detail::FlickerCascade> flicker;
    double phase;      // integrated x for FM types
    double frequency;  // y state for random-walk FM
  };
  double tau0_;
  std::vector<Part> parts_;
};

/// Uniformly sampled power-law series; bit-reproducible per profile seed.
inline TimeErrorSeries synthesize_time_error_series(const NoiseProfile& profile, std::size_t n,
                                                    double tau0) {
  if (n < 4) throw ValidationError("n", "at least 4 samples are needed for one TDEV point");
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw ValidationError("tau0", "must be > 0");
  NoiseSynthesizer gen(profile, tau0);
  TimeErrorSeries out;
  out.tau0 = tau0;
  out.seed = profile.rng_seed;
  out.description = profile.describe();
  out.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.values.push_back(gen.next());
  return out;
}

// Common deterministic frequency terms imposed on clocks that share a reference.
struct FrequencyReference {
  double frac_frequency = 0.0;
  double drift = 0.0;  // 1/s
};

struct ClockModel {
  double initial_offset = 0.0;  // s
  double frac_frequency = 0.0;  // dimensionless
  double drift = 0.0;           // 1/s
  NoiseProfile noise;
  bool freq_ref_shared = false;
  FrequencyReference reference;
  double pulse_period = 10e-3;  // s

  double effective_frac_frequency() const noexcept {
    return freq_ref_shared ? reference.frac_frequency : frac_frequency;
  }
  double effective_drift() const noexcept {
    return freq_ref_shared ? reference.drift : drift;
  }

  void validate(const std::string& where = "clock") const {
    if (!(pulse_period > 0.0) || !std::isfinite(pulse_period)) {
      throw ValidationError(where + ".pulse_period_s", "must be > 0");
    }
    for (double v : {initial_offset, frac_frequency, drift, reference.frac_frequency,
                     reference.drift}) {
      if (!std::isfinite(v)) throw ValidationError(where, "deterministic terms must be finite");
    }
    try {
      noise.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(where + "." + e.field(), "amplitude must be finite and >= 0");
    }
  }
};

/// One realization of a ClockModel. Noise lives on the pulse grid and is
/// generated lazily; repeated queries at the same instant return the same value.
class Clock {
 public:
  explicit Clock(ClockModel model) : model_(validated(std::move(model))), gen_(model_.noise, model_.pulse_period) {}

  const ClockModel& model() const noexcept { return model_; }

  double deterministic_error(double t) const noexcept {
    return model_.initial_offset + model_.effective_frac_frequency() * t +
           0.5 * model_.effective_drift() * t * t;
  }

  double noise_at(double t) const {
    if (model_.noise.components.empty()) return 0.0;
    const auto index = static_cast<std::size_t>(std::llround(std::max(t, 0.0) / model_.pulse_period));
    while (cache_.size() <= index) cache_.push_back(gen_.next());
    return cache_[index];
  }

  double time_error(double t) const { return deterministic_error(t) + noise_at(t); }

 private:
  static ClockModel validated(ClockModel m) {
    m.validate();
    return m;
  }

  ClockModel model_;
  mutable NoiseSynthesizer gen_;
  mutable std::vector<double> cache_;
};

inline double clock_time_error(const Clock& clock, double t) {
  if (!(t >= 0.0)) throw ValidationError("t", "must be >= 0");
  return clock.time_error(t);
}

/// True emission instants of `count` pulses starting at `true_start`; a clock
/// that is fast by x fires x early. First-order inversion of local time.
inline std::vector<double> pulse_times(const Clock& clock, double true_start, std::size_t count) {
  if (count < 1) throw ValidationError("count", "must be >= 1");
  std::vector<double> out;
  out.reserve(count);
  const double period = clock.model().pulse_period;
  for (std::size_t k = 0; k < count; ++k) {
    const double nominal = true_start + static_cast<double>(k) * period;
    out.push_back(nominal - clock.time_error(nominal));
  }
  return out;
}

}  // namespace fots
