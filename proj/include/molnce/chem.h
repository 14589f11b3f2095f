//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_CHEM_H_
#define MOLNCE_CHEM_H_

#include <span>
#include <string>
#include <vector>

#include "molnce/molgraph.h"

namespace molnce {

struct ValidityReport {
  bool valid = true;
  std::vector<std::pair<NodeId, std::string>> violations;
};

// Allowed total bond orders (heavy-atom bonds plus hydrogens) for an atom,
// ascending. Empty for unsupported charge states.
std::span<const int> allowed_valences(Element element, int charge);

// Sum of bond orders over the incident edges of v.
int bond_order_sum(const OrderedMolGraph &g, NodeId v);

// Hydrogens filling the smallest allowed valence >= the bond-order sum, or -1
// when no allowed valence is large enough.
int implicit_hydrogens(const AtomLabel &atom, int bond_order_sum);

ValidityReport validate_valence(const OrderedMolGraph &g);

double atomic_mass(Element element);
inline constexpr double kHydrogenMass = 1.008;

// Average molecular weight including implicit hydrogens.
double molecular_weight(const OrderedMolGraph &g);

// Cyclomatic number |E| - |V| + components.
int ring_count(const OrderedMolGraph &g);

}  // namespace molnce

#endif  // MOLNCE_CHEM_H_
