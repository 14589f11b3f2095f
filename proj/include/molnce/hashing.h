//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_HASHING_H_
#define MOLNCE_HASHING_H_

#include <cstdint>

namespace molnce::internal {

// Platform-independent mixing so that fingerprints and digests do not depend
// on std::hash.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return mix64(seed ^ (mix64(v) + 0x632be59bd9b4e019ULL + (seed << 6)
                       + (seed >> 2)));
}

}  // namespace molnce::internal

#endif  // MOLNCE_HASHING_H_
