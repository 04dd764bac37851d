#include "pmrt/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "pmrt/errors.hpp"

namespace pmrt {

uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  // splitmix64 finalizer applied over the concatenated words.
  uint64_t x = seed;
  auto absorb = [&x](uint64_t w) {
    x += 0x9e3779b97f4a7c15ull + w;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    x = z ^ (z >> 31);
  };
  absorb(a);
  absorb(b);
  absorb(c);
  return x;
}

double Rng::normal() {
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw InvalidConfig("uniform_int: empty range");
  uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
  // Rejection sampling keeps the draw unbiased for all spans.
  uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return lo + static_cast<int>(r % span);
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << gen_;
  return os.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream is(state);
  is >> gen_;
  if (is.fail()) throw CorruptCheckpoint("rng state malformed");
}

}  // namespace pmrt
