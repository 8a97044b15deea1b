#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fots/fots.hpp"

namespace fots::testing {

// Tolerance for identities evaluated on millisecond-scale instants: a few ulps
// of 5 ms, still two orders below the 1 fs acceptance bound.
inline constexpr double kRoundoff = 1e-17;

inline std::filesystem::path scenario_dir() { return FOTS_SCENARIO_DIR; }

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fots_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// True when both trees hold the same relative paths with identical bytes.
inline bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::vector<std::filesystem::path> fa, fb;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) fa.push_back(std::filesystem::relative(e.path(), a));
  }
  for (const auto& e : std::filesystem::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) fb.push_back(std::filesystem::relative(e.path(), b));
  }
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb || fa.empty()) return false;
  for (const auto& f : fa) {
    if (slurp(a / f) != slurp(b / f)) return false;
  }
  return true;
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline NoiseProfile single(NoiseType type, double amplitude, std::uint64_t seed) {
  NoiseProfile p;
  p.components.push_back({type, amplitude});
  p.rng_seed = seed;
  return p;
}

inline LinkModel fiber(double km, double dispersion = 0.0) {
  LinkModel l;
  l.length_km = km;
  l.dispersion_coeff = dispersion;
  return l;
}

inline ClockModel offset_clock(double x0) {
  ClockModel c;
  c.initial_offset = x0;
  return c;
}

// Oracle for a random-walk phase with step std s: the n-window second
// difference is sum_k w_k s_k, so E[TDEV^2] = s^2 * sum(w^2) / (6 n^2).
inline double random_walk_tdev(double step_std, std::size_t n) {
  double sw2 = 0.0;
  for (std::size_t k = 0; k < 3 * n; ++k) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i + n <= k && k < i + 2 * n) w += 1.0;
      if (i <= k && k < i + n) w -= 1.0;
    }
    sw2 += w * w;
  }
  return step_std * std::sqrt(sw2 / (6.0 * double(n) * double(n)));
}

}  // namespace fots::testing
