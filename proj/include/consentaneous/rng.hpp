#pragma once

#include <cstdint>
#include <random>

namespace consentaneous {

using Engine = std::mt19937_64;

// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent noise sources inside one realization. Each gets its own engine
// so that toggling one source never shifts the draws of another.
enum class Stream : std::uint64_t {
  kFundamentalists = 1,
  kMood = 2,
  kRatio = 3,
  kExogenous = 4,
  kWiener = 5,
};

constexpr std::uint64_t stream_seed(std::uint64_t seed, Stream stream) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL));
}

// Seed of realization r: splitmix64(base_seed XOR r). Appending realizations
// never alters the seeds of existing ones.
constexpr std::uint64_t realization_seed(std::uint64_t base_seed, std::uint64_t r) {
  return splitmix64(base_seed ^ r);
}

inline Engine make_engine(std::uint64_t seed, Stream stream) {
  return Engine(stream_seed(seed, stream));
}

}  // namespace consentaneous
