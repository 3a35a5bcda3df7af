#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace ssa {

// Stable across platforms and runs, unlike std::hash.
inline uint64_t fnv1a(std::string_view data, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, std::initializer_list<uint64_t> parts) {
  uint64_t h = splitmix64(seed);
  for (uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return mix_seed(seed, {a, b});
}

// Per-image seed; stable under input reordering.
inline uint64_t image_seed(uint64_t seed, std::string_view image_id) {
  return mix_seed(seed, {fnv1a(image_id)});
}

}  // namespace ssa
