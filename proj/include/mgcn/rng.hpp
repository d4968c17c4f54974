#pragma once

#include <cstdint>
#include <utility>
#include <vector>
#include <random>

namespace mgcn {

// Deterministic random stream. Wraps std::mt19937_64 but derives doubles,
// bounded integers and normals from the raw 64-bit output itself, so the
// sequence of values is fixed by the seed alone and does not depend on
// standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1): top 53 bits of one draw.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes two uniforms per pair and caches
  // the second value.
  double normal();

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t bounded(std::uint64_t n);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an unrelated stream seed from a base seed (splitmix64 step), used to
// keep e.g. parameter init and epoch-level sampling on separate streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace mgcn
