#pragma once

#include <cstdint>
#include <random>

namespace odtrec {

/// Independent named streams derived from one 64-bit seed.
enum class Stream : std::uint64_t {
  kFactorA = 1,
  kFactorB = 2,
  kFactorC = 3,
  kCorruption = 4,
  kNoise = 5,
  kJennrich = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Child seed for (seed, counter); distinct counters give unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) {
  return splitmix64(splitmix64(seed) ^ splitmix64(counter * 0xd1b54a32d192ed03ull + 1));
}

inline std::mt19937_64 make_engine(std::uint64_t seed, Stream s) {
  return std::mt19937_64(derive_seed(seed, static_cast<std::uint64_t>(s)));
}

}  // namespace odtrec
