#pragma once

// Seeding contract: one master seed per run; sub-seeds derived deterministically
// from (master, stream tags) so that independent jobs (grid cell, sample index,
// sweep number, ...) never share a stream.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sbmlab {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> tags) {
  uint64_t h = splitmix64(master);
  for (uint64_t t : tags) h = splitmix64(h ^ splitmix64(t));
  return h;
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

}  // namespace sbmlab
