#ifndef PMRT_RNG_HPP
#define PMRT_RNG_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pmrt {

// Mixes a base seed with stream identifiers so independent consumers
// (per-sequence noise, per-epoch shuffles, per-component init) get
// decorrelated, order-independent streams.
uint64_t mix_seed(uint64_t seed, uint64_t a = 0, uint64_t b = 0, uint64_t c = 0);

// Deterministic RNG. The distribution transforms are implemented here rather
// than via <random> distributions, whose algorithms are
// implementation-defined; frozen test values must not depend on the stdlib.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. Stateless across calls (the second
  // variate is discarded) so serialization is just the engine state.
  double normal();

  double normal(double mean, double std) { return mean + std * normal(); }

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string serialize() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 gen_;
};

}  // namespace pmrt

#endif  // PMRT_RNG_HPP
