//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_FINGERPRINT_H_
#define MOLNCE_FINGERPRINT_H_

#include <cstdint>
#include <vector>

#include "molnce/molgraph.h"

namespace molnce {

class Fingerprint {
public:
  Fingerprint() = default;
  Fingerprint(int nbits, int radius);

  int nbits() const { return nbits_; }
  int radius() const { return radius_; }

  void set(int bit);
  bool test(int bit) const;
  int popcount() const;

  bool operator==(const Fingerprint &) const = default;

  friend double tanimoto(const Fingerprint &a, const Fingerprint &b);

private:
  int nbits_ = 0;
  int radius_ = 0;
  std::vector<std::uint64_t> words_;
};

inline constexpr int kDefaultFingerprintBits = 2048;
inline constexpr int kDefaultFingerprintRadius = 2;

// ECFP-style circular fingerprint. Atom invariants start from (element,
// charge, degree, bond-order sum); each round hashes the sorted
// (bond order, neighbor invariant) pairs into the atom's invariant. Every
// invariant of every round sets bit (invariant mod nbits).
Fingerprint circular_fingerprint(const OrderedMolGraph &g,
                                 int radius = kDefaultFingerprintRadius,
                                 int nbits = kDefaultFingerprintBits);

// |a & b| / |a | b|, 1.0 when both are empty. Throws LengthMismatch.
double tanimoto(const Fingerprint &a, const Fingerprint &b);

}  // namespace molnce

#endif  // MOLNCE_FINGERPRINT_H_
