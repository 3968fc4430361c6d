#ifndef SQVI_RANDOM_H_
#define SQVI_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sqvi {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent sub-stream seeds.
inline std::uint64_t MixSeed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Identifies a reproducible random stream. Sub-streams are derived by
// hashing the parent seed with a path of integers (replicate, iteration,
// batch index, ...), so sibling streams never overlap in practice.
struct StreamId {
  std::uint64_t seed = 0;

  StreamId Child(std::uint64_t index) const {
    return StreamId{MixSeed(seed ^ MixSeed(index + 0x51ed2701ULL))};
  }
  StreamId Child(std::initializer_list<std::uint64_t> path) const {
    StreamId s = *this;
    for (std::uint64_t p : path) s = s.Child(p);
    return s;
  }
  Rng MakeRng() const { return Rng(MixSeed(seed)); }

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

}  // namespace sqvi

#endif  // SQVI_RANDOM_H_
