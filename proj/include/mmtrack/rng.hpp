#pragma once

#include <cstdint>

namespace mmtrack::rng {

// Counter-based randomness: every draw is a pure function of (seed, keys), so
// the particle filter gives the same result whatever order particles are
// processed in.

constexpr std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix(a ^ mix(b + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t key(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return combine(combine(a, b), c);
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace mmtrack::rng
