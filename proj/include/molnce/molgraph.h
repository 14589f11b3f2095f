//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_MOLGRAPH_H_
#define MOLNCE_MOLGRAPH_H_

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace molnce {

enum class Element : std::uint8_t {
  kB,
  kC,
  kN,
  kO,
  kP,
  kS,
  kF,
  kCl,
  kBr,
  kI,
};

inline constexpr int kElementCount = 10;

std::string_view element_symbol(Element e);
std::optional<Element> element_from_symbol(std::string_view symbol);

enum class Chirality : std::uint8_t {
  kNone,
  kCW,
  kCCW,
};

std::string_view chirality_name(Chirality c);
std::optional<Chirality> chirality_from_name(std::string_view name);

inline constexpr int kMinCharge = -2;
inline constexpr int kMaxCharge = 2;

struct AtomLabel {
  Element element = Element::kC;
  int charge = 0;
  Chirality chirality = Chirality::kNone;

  auto operator<=>(const AtomLabel &) const = default;
};

std::string to_string(const AtomLabel &atom);

enum class NodeKind : std::uint8_t {
  kTerminal,
  kNonterminal,  // x
  kEmpty,        // n_sigma, an atom placeholder inside a skeleton
  kStart,        // s
};

class NodeLabel {
public:
  constexpr NodeLabel() = default;

  static constexpr NodeLabel terminal(AtomLabel atom) {
    NodeLabel l;
    l.kind_ = NodeKind::kTerminal;
    l.atom_ = atom;
    return l;
  }
  static constexpr NodeLabel nonterminal() { return of(NodeKind::kNonterminal); }
  static constexpr NodeLabel empty() { return of(NodeKind::kEmpty); }
  static constexpr NodeLabel start() { return of(NodeKind::kStart); }

  constexpr NodeKind kind() const { return kind_; }
  constexpr bool is_terminal() const { return kind_ == NodeKind::kTerminal; }
  // Only meaningful for terminal labels.
  constexpr const AtomLabel &atom() const { return atom_; }

  auto operator<=>(const NodeLabel &) const = default;

  // "x", "n", "s", or the atom written as e.g. "N+1@" (see to_string).
  std::string to_string() const;
  static NodeLabel parse(std::string_view text);

private:
  static constexpr NodeLabel of(NodeKind k) {
    NodeLabel l;
    l.kind_ = k;
    return l;
  }

  NodeKind kind_ = NodeKind::kStart;
  AtomLabel atom_ {};
};

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
};

// Edge label as a multiset of Kekule bond orders. The empty multiset is the
// placeholder label n_psi; a single element is an ordinary bond. Several
// elements label an edge between an atom and a non-terminal that stands for a
// fragment the atom is bonded to more than once (ring closures): the bundle
// fixes how many bonds of each order the atom will receive.
class EdgeLabel {
public:
  constexpr EdgeLabel() = default;

  static constexpr EdgeLabel empty() { return EdgeLabel(); }
  static constexpr EdgeLabel bond(BondOrder order) {
    EdgeLabel l;
    ++l.counts_[static_cast<int>(order) - 1];
    return l;
  }

  constexpr bool is_empty() const { return bond_count() == 0; }
  constexpr bool is_bond() const { return bond_count() == 1; }
  constexpr bool is_bundle() const { return bond_count() > 1; }

  constexpr int bond_count() const {
    return counts_[0] + counts_[1] + counts_[2];
  }
  constexpr int order_sum() const {
    return counts_[0] + 2 * counts_[1] + 3 * counts_[2];
  }
  constexpr int count(BondOrder order) const {
    return counts_[static_cast<int>(order) - 1];
  }
  // Requires is_bond().
  BondOrder bond_order() const;

  EdgeLabel &operator+=(const EdgeLabel &other);

  auto operator<=>(const EdgeLabel &) const = default;

  // "-", "=", "#" for bonds, "~" for n_psi, concatenations such as "--=" for
  // bundles (singles first, then doubles, then triples).
  std::string to_string() const;
  static EdgeLabel parse(std::string_view text);

private:
  std::array<std::uint8_t, 3> counts_ {};
};

using NodeId = int;

struct Incidence {
  NodeId neighbor;
  EdgeLabel label;

  bool operator==(const Incidence &) const = default;
};

struct Edge {
  NodeId a;
  NodeId b;
  EdgeLabel label;

  bool operator==(const Edge &) const = default;
};

// Simple undirected graph with node and edge labels and, for each node, an
// ordered list of its incident edges. Node ids are dense 0..n-1.
class OrderedMolGraph {
public:
  OrderedMolGraph() = default;

  NodeId add_node(NodeLabel label);
  // Appends the edge at the end of both incident lists.
  void add_edge(NodeId u, NodeId v, EdgeLabel label);

  int size() const { return static_cast<int>(labels_.size()); }
  bool empty() const { return labels_.empty(); }
  int num_edges() const;

  const NodeLabel &label(NodeId v) const { return labels_[v]; }
  void set_label(NodeId v, NodeLabel label) { labels_[v] = label; }

  std::span<const Incidence> incident(NodeId v) const { return adj_[v]; }
  int degree(NodeId v) const { return static_cast<int>(adj_[v].size()); }

  // Low-level access used by graph rewriting. Callers keep both directions
  // of every edge consistent.
  std::vector<Incidence> &mutable_incident(NodeId v) { return adj_[v]; }

  std::optional<EdgeLabel> edge_label(NodeId u, NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const { return edge_label(u, v).has_value(); }

  // Edges with a < b, ordered by a, then by position in a's incident list.
  std::vector<Edge> edges() const;

  bool is_connected() const;
  bool all_terminal() const;

  // Throws std::logic_error when the structural invariants are violated.
  void check_invariants() const;

  // Graph with node i of the result equal to node perm[i] of this graph.
  // Incident orders are carried over.
  OrderedMolGraph permuted(std::span<const NodeId> perm) const;

  bool operator==(const OrderedMolGraph &) const = default;

private:
  std::vector<NodeLabel> labels_;
  std::vector<std::vector<Incidence>> adj_;
};

}  // namespace molnce

#endif  // MOLNCE_MOLGRAPH_H_
