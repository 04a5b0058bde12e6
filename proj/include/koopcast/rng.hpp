#pragma once

#include <cstdint>
#include <cmath>

namespace koopcast {

// Deterministic RNG with explicitly-coded distributions.
// std::normal_distribution output is implementation-defined, so Gaussian
// sampling is done here via Box-Muller to keep runs bit-reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix(seed + 0x9e3779b97f4a7c15ull)) {}

  uint64_t next_u64() {
    // xorshift64* generator
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // index in [0, n)
  uint64_t index(uint64_t n) { return next_u64() % n; }

  // Stateless counter-based hash used for minibatch sampling: the sample
  // drawn at (seed, step, slot) never depends on how many draws preceded it.
  static uint64_t counter_hash(uint64_t seed, uint64_t step, uint64_t slot) {
    return splitmix(splitmix(splitmix(seed) ^ step) ^ (slot * 0xbf58476d1ce4e5b9ull));
  }

 private:
  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace koopcast
