#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace efs {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a path of indices.
/// Streams for (seed, a) and (seed, a, b) never coincide with each other.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t idx : path) h = splitmix64(h ^ splitmix64(idx + 0x632be59bd9b4e019ULL));
  return h;
}

/// Independent engine for replicate `index` of a computation seeded with `seed`.
inline Engine make_stream(std::uint64_t seed, std::uint64_t index) {
  return Engine(derive_seed(seed, {index}));
}

}  // namespace efs
