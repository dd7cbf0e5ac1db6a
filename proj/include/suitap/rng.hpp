#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace suitap::rng {

// splitmix64 finalizer.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic splitmix64 stream with named child derivation. Children are
// derived from the construction seed, not the consumed state, so the order in
// which a parent draws numbers never shifts its children.
class Stream {
 public:
  explicit Stream(uint64_t seed) : seed_(seed), state_(seed) {}

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Unbiased uniform in [0, n). n must be > 0.
  uint64_t bounded(uint64_t n) {
    const uint64_t t = (0 - n) % n;  // 2^64 mod n
    uint64_t x = next();
    while (x < t) x = next();
    return x % n;
  }

  size_t index(size_t n) { return static_cast<size_t>(bounded(n)); }

  // Box-Muller; consumes exactly two draws per call.
  double gaussian(double mean, double sigma) {
    const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  uint64_t derive_seed(std::string_view label) const { return mix64(seed_ ^ fnv1a64(label)); }
  uint64_t derive_seed(uint64_t salt) const { return mix64(seed_ ^ mix64(salt)); }

  Stream derive(std::string_view label) const { return Stream(derive_seed(label)); }
  Stream derive(uint64_t salt) const { return Stream(derive_seed(salt)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t state_;
};

}  // namespace suitap::rng
