//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/graph_json.h"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "molnce/error.h"

namespace molnce {
namespace {
using nlohmann::json;

int order_value(const EdgeLabel &label) {
  if (!label.is_bond())
    throw NonTerminalPresent("JSON graph bonds must be single, double or triple");
  return static_cast<int>(label.bond_order());
}

template <class T>
T field(const json &obj, const char *key, const char *what) {
  if (!obj.is_object() || !obj.contains(key))
    throw DataError(std::string(what) + " is missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception &e) {
    throw DataError(std::string(what) + " field '" + key + "': " + e.what());
  }
}
}  // namespace

json graph_to_json(const OrderedMolGraph &g) {
  json nodes = json::array();
  for (NodeId v = 0; v < g.size(); ++v) {
    const NodeLabel &l = g.label(v);
    if (!l.is_terminal())
      throw NonTerminalPresent("JSON graph schema holds terminal atoms only");
    nodes.push_back({
        { "id", v },
        { "element", std::string(element_symbol(l.atom().element)) },
        { "charge", l.atom().charge },
        { "chirality", std::string(chirality_name(l.atom().chirality)) },
    });
  }

  const std::vector<Edge> edges = g.edges();
  json bonds = json::array();
  std::map<std::pair<NodeId, NodeId>, int> index;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    bonds.push_back({ { "a", edges[i].a },
                      { "b", edges[i].b },
                      { "order", order_value(edges[i].label) } });
    index[{ edges[i].a, edges[i].b }] = static_cast<int>(i);
  }

  json edge_order = json::object();
  for (NodeId v = 0; v < g.size(); ++v) {
    json list = json::array();
    for (const Incidence &inc: g.incident(v))
      list.push_back(index.at({ std::min(v, inc.neighbor),
                                std::max(v, inc.neighbor) }));
    edge_order[std::to_string(v)] = std::move(list);
  }
  return { { "nodes", std::move(nodes) },
           { "bonds", std::move(bonds) },
           { "edge_order", std::move(edge_order) } };
}

OrderedMolGraph graph_from_json(const json &j) {
  if (!j.is_object())
    throw DataError("JSON graph must be an object");
  const json &nodes = j.contains("nodes") ? j.at("nodes") : json::array();
  const json &bonds = j.contains("bonds") ? j.at("bonds") : json::array();
  if (!nodes.is_array() || !bonds.is_array())
    throw DataError("JSON graph 'nodes' and 'bonds' must be arrays");

  const int n = static_cast<int>(nodes.size());
  std::vector<NodeLabel> labels(n);
  std::vector<char> seen(n, 0);
  for (const json &node: nodes) {
    const int id = field<int>(node, "id", "node");
    if (id < 0 || id >= n || seen[id])
      throw DataError("node ids must be dense and unique, got "
                      + std::to_string(id));
    seen[id] = 1;
    AtomLabel atom;
    const auto sym = field<std::string>(node, "element", "node");
    auto e = element_from_symbol(sym);
    if (!e)
      throw UnsupportedFeature("element '" + sym + "' is outside the supported set");
    atom.element = *e;
    atom.charge = node.contains("charge") ? field<int>(node, "charge", "node") : 0;
    if (atom.charge < kMinCharge || atom.charge > kMaxCharge)
      throw UnsupportedFeature("charge " + std::to_string(atom.charge)
                               + " outside [-2, +2]");
    if (node.contains("chirality")) {
      const auto name = field<std::string>(node, "chirality", "node");
      auto c = chirality_from_name(name);
      if (!c)
        throw DataError("unknown chirality '" + name + "'");
      atom.chirality = *c;
    }
    labels[id] = NodeLabel::terminal(atom);
  }

  struct RawBond {
    NodeId a, b;
    EdgeLabel label;
  };
  std::vector<RawBond> raw;
  for (const json &bond: bonds) {
    const int a = field<int>(bond, "a", "bond");
    const int b = field<int>(bond, "b", "bond");
    const int order = field<int>(bond, "order", "bond");
    if (a < 0 || b < 0 || a >= n || b >= n || a == b)
      throw DataError("bad bond endpoints " + std::to_string(a) + "-"
                      + std::to_string(b));
    if (order < 1 || order > 3)
      throw UnsupportedFeature("bond order " + std::to_string(order)
                               + " (only 1, 2, 3 are supported)");
    raw.push_back({ a, b, EdgeLabel::bond(static_cast<BondOrder>(order)) });
  }

  std::vector<std::vector<int>> order(n);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    order[raw[i].a].push_back(static_cast<int>(i));
    order[raw[i].b].push_back(static_cast<int>(i));
  }
  if (j.contains("edge_order")) {
    const json &eo = j.at("edge_order");
    if (!eo.is_object())
      throw DataError("'edge_order' must be an object");
    for (const auto &[key, list]: eo.items()) {
      int v = -1;
      try {
        v = std::stoi(key);
      } catch (const std::exception &) {
        throw DataError("bad edge_order key '" + key + "'");
      }
      if (v < 0 || v >= n)
        throw DataError("edge_order key out of range: " + key);
      std::vector<int> given;
      try {
        given = list.get<std::vector<int>>();
      } catch (const json::exception &e) {
        throw DataError("edge_order entry " + key + ": " + e.what());
      }
      std::vector<int> a = given, b = order[v];
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a != b)
        throw DataError("edge_order for node " + key
                        + " is not a permutation of its bonds");
      order[v] = std::move(given);
    }
  }

  OrderedMolGraph g;
  for (const NodeLabel &l: labels)
    g.add_node(l);
  for (NodeId v = 0; v < n; ++v) {
    auto &inc = g.mutable_incident(v);
    for (int bi: order[v]) {
      const RawBond &rb = raw[bi];
      inc.push_back({ rb.a == v ? rb.b : rb.a, rb.label });
    }
  }
  try {
    g.check_invariants();
  } catch (const std::logic_error &e) {
    throw DataError(std::string("invalid JSON graph: ") + e.what());
  }
  return g;
}

}  // namespace molnce
