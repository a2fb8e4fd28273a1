// Deterministic, platform-independent random number utilities.
//
// All stochastic components draw from streams derived by hashing a
// (seed, generation, child-index, salt) key, so results are independent
// of thread scheduling and worker count.  std:: distributions are
// deliberately avoided: their output is implementation-defined.
#pragma once

#include <cstdint>

namespace mgs {

// splitmix64: tiny, well-mixed generator used both directly and to key
// per-context streams.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n), n >= 1.  Rejection sampling keeps the
  // distribution exact and platform-independent.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  // Uniform real in [0, 1) with 53 bits of precision.
  double uniform_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform_real() < p; }
};

// Derives an independent stream from a structured key.  Used as
// stream(seed, generation, index, salt) throughout the search engine.
inline Rng rng_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                      std::uint64_t salt) {
  Rng h(seed ^ 0x6a09e667f3bcc909ULL);
  h.state ^= h.next() + a;
  h.state ^= h.next() + (b << 1);
  h.state ^= h.next() + (salt << 2);
  h.next();
  return h;
}

}  // namespace mgs
