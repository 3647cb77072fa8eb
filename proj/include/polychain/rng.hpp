#pragma once

// Seeding utilities. Every random stream in the library is derived from a
// single experiment seed through child_seed(), so a run is reproducible from
// (config, seed) alone. The derivation rule is:
//
//   child = splitmix64(parent ^ label ^ splitmix64(index))
//
// with fixed per-purpose labels below. Two streams with different labels or
// indices are decorrelated by the splitmix64 mixing.

#include <cstdint>
#include <random>

namespace polychain {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Fixed stream labels ("SIGMA", "TILDE", "REPL", "TASK" as byte strings).
inline constexpr std::uint64_t kLabelSigmaChain = 0x5349474d41ull;
inline constexpr std::uint64_t kLabelTildeChain = 0x54494c4445ull;
inline constexpr std::uint64_t kLabelReplica = 0x5245504cull;
inline constexpr std::uint64_t kLabelTask = 0x5441534bull;
inline constexpr std::uint64_t kLabelInit = 0x494e4954ull;

inline std::uint64_t child_seed(std::uint64_t parent, std::uint64_t label,
                                std::uint64_t index = 0) {
  return splitmix64(parent ^ label ^ splitmix64(index));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

}  // namespace polychain
