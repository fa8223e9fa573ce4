#ifndef LADDER_RNG_HPP_
#define LADDER_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>

namespace ladder {

// splitmix64 step; used to derive independent sub-seeds from one root seed.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based derivation: every component draws its seed from the root seed
// plus a stable label, so adding a component never shifts another's stream.
inline uint64_t derive_seed(uint64_t root, const std::string& label,
                            uint64_t counter = 0) {
  uint64_t h = root;
  for (unsigned char c : label) h = splitmix64(h ^ c);
  return splitmix64(h ^ counter);
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace ladder

#endif  // LADDER_RNG_HPP_
