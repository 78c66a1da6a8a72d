#pragma once

#include <cstdint>
#include <random>

namespace sagnn {

using Rng = std::mt19937_64;

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based substream derivation: the seed of stream (a, b) under a
// parent seed depends only on the three values, never on call order.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t a,
                               std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

// Fixed stream labels so that unrelated consumers of one --seed never share
// a stream.
enum class StreamTag : std::uint64_t {
  Split = 0x5350,
  Init = 0x494e,
  Shuffle = 0x5348,
  Sample = 0x5341,
  Eval = 0x4556,
  UserInit = 0x5549,
  Export = 0x4558,
};

inline std::uint64_t substream(std::uint64_t seed, StreamTag tag,
                               std::uint64_t b = 0) {
  return substream(seed, static_cast<std::uint64_t>(tag), b);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace sagnn
