//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_SMILES_H_
#define MOLNCE_SMILES_H_

#include <string>
#include <string_view>

#include "molnce/molgraph.h"

namespace molnce {

// Reads a Kekule SMILES string into a heavy-atom graph with implicit
// hydrogens. Supported: organic-subset atoms, bracket atoms with charge,
// @/@@ and an H count, bonds - = #, branches and ring closures (digits and
// %nn). Incident edges are ordered by their appearance in the string; a
// ring bond takes the position of its ring-closure digit.
//
// Throws SyntaxError for malformed input and UnsupportedFeature for aromatic
// atoms, isotopes, wildcards, directional bonds and dot-disconnected input.
OrderedMolGraph parse_smiles(std::string_view text);

// Writes a connected terminal graph depth-first from node 0, following each
// node's incident order. Deterministic for a given graph.
std::string write_smiles(const OrderedMolGraph &g);

}  // namespace molnce

#endif  // MOLNCE_SMILES_H_
