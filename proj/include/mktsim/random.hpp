#pragma once

#include <cstdint>
#include <random>

namespace mktsim {

// SplitMix64 finalizer; used to derive independent seeds from (master, stream).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Combines a master seed with a stream id so that streams are mutually
// independent: agents keep their draws when unrelated agents are added.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(master, stream));
}

}  // namespace mktsim
