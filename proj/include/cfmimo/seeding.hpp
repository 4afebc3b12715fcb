#pragma once

#include <cstdint>

namespace cfmimo {

// Counter-based seed splitting (splitmix64 finalizer). A child seed depends
// only on (parent, tag), so trial order and threading never change results.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return mix64(mix64(parent) ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

// Substream tags used inside one trial.
enum class Stream : std::uint64_t {
  kLayout = 1,
  kShadowing = 2,
  kFading = 3,
  kBaselineRandom = 4,
};

constexpr std::uint64_t stream_seed(std::uint64_t trial_seed, Stream s) {
  return derive_seed(trial_seed, static_cast<std::uint64_t>(s));
}

}  // namespace cfmimo
