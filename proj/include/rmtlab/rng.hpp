#pragma once

#include <cstdint>
#include <random>

namespace rmtlab {

/// Engine used for every sampled quantity.
using Engine = std::mt19937_64;

/// SplitMix64 finalizer; a bijective mixing of 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for (seed, trial). The stream depends only on the pair,
/// so trials can be generated in any order or on any worker.
Engine trial_stream(std::uint64_t seed, std::uint64_t trial,
                    std::uint64_t purpose = 0);

}  // namespace rmtlab
