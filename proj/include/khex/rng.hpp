#pragma once
#include <cstdint>

namespace khex {

// splitmix64, used only to expand a user seed into generator state.
struct SplitMix64 {
  uint64_t x;
  explicit SplitMix64(uint64_t seed) : x(seed) {}
  uint64_t next() {
    uint64_t z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

// xoshiro256++ (Blackman/Vigna family). Fast, 256-bit state, jumpless use:
// independent streams come from distinct seeds expanded through splitmix64.
struct Xoshiro256 {
  uint64_t s[4];

  explicit Xoshiro256(uint64_t seed = 0x8ba921c86e58f8f1ull) { reseed(seed); }

  void reseed(uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s) w = sm.next();
  }

  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t next() {
    const uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  // uniform in [0,1) with 53 random bits
  double uniform() { return (next() >> 11) * 0x1.0p-53; }

  // unbiased uniform integer in [0, n), Lemire's method
  uint64_t below(uint64_t n) {
    unsigned __int128 m = (unsigned __int128)next() * n;
    uint64_t lo = (uint64_t)m;
    if (lo < n) {
      uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = (unsigned __int128)next() * n;
        lo = (uint64_t)m;
      }
    }
    return (uint64_t)(m >> 64);
  }
};

}  // namespace khex
