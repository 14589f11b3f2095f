//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_ISOMORPHISM_H_
#define MOLNCE_ISOMORPHISM_H_

#include <cstdint>

#include "molnce/molgraph.h"

namespace molnce {

// Label-preserving graph isomorphism (node labels and edge labels; incident
// orders are ignored). Color refinement followed by backtracking.
bool is_isomorphic(const OrderedMolGraph &g1, const OrderedMolGraph &g2);

// Isomorphism-invariant 64-bit digest (refined color histogram). Equal for
// isomorphic graphs; collisions are possible, so pair it with is_isomorphic.
std::uint64_t invariant_hash(const OrderedMolGraph &g);

}  // namespace molnce

#endif  // MOLNCE_ISOMORPHISM_H_
