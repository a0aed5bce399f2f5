#ifndef CFMPP_RANDOM_HPP
#define CFMPP_RANDOM_HPP

#include <cstdint>
#include <random>

namespace cfmpp {

using Rng = std::mt19937_64;

struct RngSeed {
  std::uint64_t value = 0;
};

/// Replicate r of a run seeded with s uses seed s + r.
inline RngSeed replicate_seed(RngSeed base, std::uint64_t replicate) {
  return RngSeed{base.value + replicate};
}

/// Independent stream `stream` of a seed (splitmix64 finalizer), used when one
/// run needs several generators.
inline RngSeed derive_seed(RngSeed seed, std::uint64_t stream) {
  std::uint64_t z = seed.value + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return RngSeed{z ^ (z >> 31)};
}

inline Rng make_rng(RngSeed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.value),
                    static_cast<std::uint32_t>(seed.value >> 32), 0x9e3779b9u};
  return Rng(seq);
}

}  // namespace cfmpp

#endif  // CFMPP_RANDOM_HPP
