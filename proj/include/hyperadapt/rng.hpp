#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hyperadapt {

// Deterministic in-repo PRNG so every sampling decision is reproducible
// bit-for-bit across platforms and languages.
//
// Generator: xoshiro256** 1.0 (Blackman & Vigna, public domain), seeded
// through splitmix64 as its authors recommend. Stream derivation for
// named substreams (per domain, per epoch, ...) is
//   derived_seed = splitmix64(seed ^ fnv1a64(label))
// which is what derive_seed() below computes.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t derive_seed(uint64_t seed, std::string_view label) {
  return splitmix64(seed ^ fnv1a64(label));
}

class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& word : s_) {
      x = splitmix64(x);
      word = x;
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl_(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl_(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), 53 significant bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n) via rejection.
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), returned sorted ascending so callers
  // preserve the relative order of survivors. Floyd's sampling algorithm.
  std::vector<size_t> sample_indices(size_t n, size_t k);

  // Uniform draw from the (n-1)-simplex: symmetric Dirichlet(1) via
  // normalized exponentials.
  Eigen::VectorXd simplex(int n);

 private:
  static uint64_t rotl_(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace hyperadapt
