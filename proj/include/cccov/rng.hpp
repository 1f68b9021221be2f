#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cccov {

// SplitMix64 finalizer, used to turn structured inputs (seed, tag) into
// well-mixed generator seeds.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent child seed from (seed, tag).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

// Seed for replication `rep` of a run keyed by `master`. Replications are
// indexed, not sequential: any subset can be regenerated in any order.
inline std::uint64_t replication_seed(std::uint64_t master, std::uint64_t rep) {
  return derive_seed(master, 0x7265706cULL + rep);
}

// One named random stream of a sample ("x", "z", "eps", "c", "delta").
// Streams with different names are independent; a stream's draws do not
// depend on how many draws other streams consumed.
inline std::mt19937_64 named_stream(std::uint64_t seed, std::string_view name) {
  return std::mt19937_64(derive_seed(seed, fnv1a64(name)));
}

}  // namespace cccov
