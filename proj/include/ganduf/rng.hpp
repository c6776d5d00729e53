#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ganduf {

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Derive a child seed from a base seed and a path of integer labels.
/// derive_seed(s, a, b) is stable across platforms and library versions.
template <typename... Labels>
std::uint64_t derive_seed(std::uint64_t base, Labels... labels) {
  std::uint64_t s = mix_seed(base);
  ((s = mix_seed(s ^ (static_cast<std::uint64_t>(labels) + 0x9e3779b97f4a7c15ULL))), ...);
  return s;
}

/// Deterministic random source. Uniforms are built from the raw 64-bit
/// mt19937_64 stream and normals via Box-Muller so draws do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::vector<double> uniform_vector(std::size_t n, double lo = 0.0, double hi = 1.0);
  std::vector<double> normal_vector(std::size_t n, double stddev = 1.0);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ganduf
