#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gmraim {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; mixes a seed with a stream tag so that independent
/// components never share a random sequence.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view stream) {
  return mix_seed(seed, stream_tag(stream));
}

}  // namespace gmraim
