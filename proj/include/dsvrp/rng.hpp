#pragma once

#include <cstdint>
#include <random>

namespace dsvrp {

using Rng = std::mt19937_64;

// Named streams of the per-run generator. Each consumer draws from its own
// stream so that the number of draws made by one never shifts another.
enum class RngStream : std::uint64_t {
  kPoolInit = 1,
  kPoolUpdate = 2,
  kPoolResample = 3,
  kSearch = 4,
  kAnneal = 5,
  kInstance = 6,
  kInsertion = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng derive_rng(std::uint64_t seed, RngStream stream, std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ index);
  return Rng(h);
}

}  // namespace dsvrp
