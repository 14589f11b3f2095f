//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_GRAPH_JSON_H_
#define MOLNCE_GRAPH_JSON_H_

#include <nlohmann/json.hpp>

#include "molnce/molgraph.h"

namespace molnce {

// {"nodes":[{"id","element","charge","chirality"}],
//  "bonds":[{"a","b","order"}],
//  "edge_order":{"<node id>":[bond indices...]}}
//
// edge_order is optional on input; missing entries follow bond-array order.
// Output always carries edge_order so that incident orders survive.
nlohmann::json graph_to_json(const OrderedMolGraph &g);
OrderedMolGraph graph_from_json(const nlohmann::json &j);

}  // namespace molnce

#endif  // MOLNCE_GRAPH_JSON_H_
