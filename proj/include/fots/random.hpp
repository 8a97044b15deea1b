#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fots {

using Engine = std::mt19937_64;

// splitmix64 finalizer; decorrelates nearby integer seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for one component of a run: FNV-1a over the component path, folded
/// with the mixed master seed. Paths look like "clocks.server.noise".
constexpr std::uint64_t derive_seed(std::uint64_t master_seed,
                                    std::string_view component_path) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : component_path) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(master_seed) ^ h);
}

// Unit normal draws from a private engine. Distribution state is reset per
// draw so a stream is a pure function of (seed, draw index).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(engine_);
  }

 private:
  Engine engine_;
};

}  // namespace fots
