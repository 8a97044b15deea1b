#pragma once

// Time-domain stability of time-error series.
//
// Overlapping TDEV at tau = n*tau0 over N samples:
//   TDEV^2 = 1 / (6 n^2 (N - 3n + 1)) * sum_{j=0}^{N-3n} [ sum_{i=j}^{j+n-1} (x[i+2n] - 2x[i+n] + x[i]) ]^2

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fots/errors.hpp"
#include "fots/timebase.hpp"

namespace fots {

enum class Estimator { overlapping_tdev, mdev, overlapping_adev };

struct StabilityPoint {
  double tau = 0.0;
  double value = 0.0;
  std::size_t n_samples = 0;  // number of terms in the outer average
};

struct StabilityCurve {
  std::vector<StabilityPoint> points;
  Estimator estimator = Estimator::overlapping_tdev;

  const StabilityPoint* at(double tau) const {
    for (const auto& p : points) {
      if (std::abs(p.tau - tau) <= 1e-9 * tau) return &p;
    }
    return nullptr;
  }
};

namespace detail {

inline std::size_t tau_multiple(double tau, double tau0) {
  const double m = tau / tau0;
  const double r = std::nearbyint(m);
  if (!(r >= 1.0) || std::abs(m - r) > 1e-9 * r) {
    throw ValidationError("tau", "must be a positive multiple of tau0");
  }
  return static_cast<std::size_t>(r);
}

// Moving sums of n consecutive second differences; entry j covers i = j..j+n-1.
inline std::vector<long double> windowed_second_differences(std::span<const double> x,
                                                            std::size_t n) {
  const std::size_t count = x.size() - 2 * n;
  std::vector<long double> prefix(count + 1, 0.0L);
  for (std::size_t i = 0; i < count; ++i) {
    const long double d = static_cast<long double>(x[i + 2 * n]) - 2.0L * x[i + n] + x[i];
    prefix[i + 1] = prefix[i] + d;
  }
  std::vector<long double> out(count - n + 1);
  for (std::size_t j = 0; j + n <= count; ++j) out[j] = prefix[j + n] - prefix[j];
  return out;
}

inline double tdev_at(std::span<const double> x, std::size_t n) {
  const std::size_t big_n = x.size();
  if (big_n < 3 * n + 1) throw ValidationError("tau", "too long for the series length");
  const auto sums = windowed_second_differences(x, n);
  long double acc = 0.0L;
  for (long double s : sums) acc += s * s;
  const long double nn = static_cast<long double>(n);
  const long double var = acc / (6.0L * nn * nn * static_cast<long double>(sums.size()));
  return static_cast<double>(std::sqrt(var));
}

}  // namespace detail

/// 1-2-5 per decade from tau0 up to N*tau0/4.
inline std::vector<double> default_tau_grid(std::size_t n_samples, double tau0) {
  std::vector<double> taus;
  for (std::size_t decade = 1; decade <= n_samples; decade *= 10) {
    for (std::size_t m : {1, 2, 5}) {
      const std::size_t n = m * decade;
      if (4 * n > n_samples || 3 * n + 1 > n_samples) return taus;
      taus.push_back(static_cast<double>(n) * tau0);
    }
  }
  return taus;
}

inline StabilityCurve tdev(const TimeErrorSeries& series, std::span<const double> taus) {
  series.validate();
  StabilityCurve curve;
  curve.estimator = Estimator::overlapping_tdev;
  double last = 0.0;
  for (double tau : taus) {
    const std::size_t n = detail::tau_multiple(tau, series.tau0);
    if (!curve.points.empty() && !(tau > last)) {
      throw ValidationError("taus", "must be strictly increasing");
    }
    last = tau;
    const double value = detail::tdev_at(series.values, n);
    curve.points.push_back({static_cast<double>(n) * series.tau0, value, series.size() - 3 * n + 1});
  }
  return curve;
}

inline StabilityCurve tdev(const TimeErrorSeries& series) {
  const auto grid = default_tau_grid(series.size(), series.tau0);
  if (grid.empty()) throw ValidationError("series", "at least 4 samples are needed for one TDEV point");
  return tdev(series, grid);
}

/// Direct evaluation of the defining double sum; the reference for tdev().
inline double tdev_bruteforce(const TimeErrorSeries& series, double tau) {
  series.validate();
  const std::size_t n = detail::tau_multiple(tau, series.tau0);
  const auto& x = series.values;
  const std::size_t big_n = x.size();
  if (big_n < 3 * n + 1) throw ValidationError("tau", "too long for the series length");
  const std::size_t terms = big_n - 3 * n + 1;
  double outer = 0.0;
  for (std::size_t j = 0; j < terms; ++j) {
    double inner = 0.0;
    for (std::size_t i = j; i < j + n; ++i) inner += x[i + 2 * n] - 2.0 * x[i + n] + x[i];
    outer += inner * inner;
  }
  const double nn = static_cast<double>(n);
  return std::sqrt(outer / (6.0 * nn * nn * static_cast<double>(terms)));
}

/// Modified Allan deviation, via MDEV = sqrt(3) * TDEV / tau.
inline StabilityCurve mdev(const TimeErrorSeries& series, std::span<const double> taus) {
  StabilityCurve curve = tdev(series, taus);
  curve.estimator = Estimator::mdev;
  for (auto& p : curve.points) p.value = std::sqrt(3.0) * p.value / p.tau;
  return curve;
}

/// Overlapping Allan deviation from time-error samples.
inline StabilityCurve adev(const TimeErrorSeries& series, std::span<const double> taus) {
  series.validate();
  StabilityCurve curve;
  curve.estimator = Estimator::overlapping_adev;
  const auto& x = series.values;
  for (double tau : taus) {
    const std::size_t n = detail::tau_multiple(tau, series.tau0);
    if (x.size() < 2 * n + 1) throw ValidationError("tau", "too long for the series length");
    const std::size_t terms = x.size() - 2 * n;
    long double acc = 0.0L;
    for (std::size_t i = 0; i < terms; ++i) {
      const long double d = static_cast<long double>(x[i + 2 * n]) - 2.0L * x[i + n] + x[i];
      acc += d * d;
    }
    const long double t = static_cast<long double>(n) * series.tau0;
    const double value =
        static_cast<double>(std::sqrt(acc / (2.0L * t * t * static_cast<long double>(terms))));
    curve.points.push_back({static_cast<double>(t), value, terms});
  }
  return curve;
}

/// Least-squares slope of log10(value) against log10(tau) over [tau_lo, tau_hi].
inline double slope(const StabilityCurve& curve, double tau_lo, double tau_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (const auto& p : curve.points) {
    if (p.tau < tau_lo * (1 - 1e-12) || p.tau > tau_hi * (1 + 1e-12)) continue;
    if (!(p.value > 0.0)) throw ValidationError("curve", "slope needs strictly positive values");
    const double lx = std::log10(p.tau);
    const double ly = std::log10(p.value);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 3) throw ValidationError("decade", "at least 3 points are needed for a slope");
  const double md = static_cast<double>(m);
  return (md * sxy - sx * sy) / (md * sxx - sx * sx);
}

}  // namespace fots
