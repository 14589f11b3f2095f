//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/molgraph.h"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <vector>

#include "molnce/error.h"

namespace molnce {
namespace {
constexpr std::array<std::string_view, kElementCount> kSymbols = {
  "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I",
};
}  // namespace

std::string_view element_symbol(Element e) {
  return kSymbols[static_cast<int>(e)];
}

std::optional<Element> element_from_symbol(std::string_view symbol) {
  for (int i = 0; i < kElementCount; ++i) {
    if (kSymbols[i] == symbol)
      return static_cast<Element>(i);
  }
  return std::nullopt;
}

std::string_view chirality_name(Chirality c) {
  switch (c) {
  case Chirality::kNone:
    return "none";
  case Chirality::kCW:
    return "cw";
  case Chirality::kCCW:
    return "ccw";
  }
  return "none";
}

std::optional<Chirality> chirality_from_name(std::string_view name) {
  if (name == "none")
    return Chirality::kNone;
  if (name == "cw")
    return Chirality::kCW;
  if (name == "ccw")
    return Chirality::kCCW;
  return std::nullopt;
}

std::string to_string(const AtomLabel &atom) {
  std::string s(element_symbol(atom.element));
  if (atom.charge != 0) {
    s += atom.charge > 0 ? '+' : '-';
    s += std::to_string(atom.charge > 0 ? atom.charge : -atom.charge);
  }
  if (atom.chirality == Chirality::kCCW)
    s += "@";
  else if (atom.chirality == Chirality::kCW)
    s += "@@";
  return s;
}

std::string NodeLabel::to_string() const {
  switch (kind_) {
  case NodeKind::kNonterminal:
    return "x";
  case NodeKind::kEmpty:
    return "n";
  case NodeKind::kStart:
    return "s";
  case NodeKind::kTerminal:
    break;
  }
  return molnce::to_string(atom_);
}

NodeLabel NodeLabel::parse(std::string_view text) {
  if (text == "x")
    return nonterminal();
  if (text == "n")
    return empty();
  if (text == "s")
    return start();

  AtomLabel atom;
  std::size_t i = 0;
  while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i])))
    ++i;
  auto elem = element_from_symbol(text.substr(0, i));
  if (!elem)
    throw DataError("unknown node label '" + std::string(text) + "'");
  atom.element = *elem;

  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    const int sign = text[i] == '+' ? 1 : -1;
    ++i;
    int mag = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
      mag = mag * 10 + (text[i++] - '0');
    atom.charge = sign * mag;
  }
  std::string_view rest = text.substr(i);
  if (rest.empty())
    atom.chirality = Chirality::kNone;
  else if (rest == "@")
    atom.chirality = Chirality::kCCW;
  else if (rest == "@@")
    atom.chirality = Chirality::kCW;
  else
    throw DataError("unknown node label '" + std::string(text) + "'");
  if (atom.charge < kMinCharge || atom.charge > kMaxCharge)
    throw DataError("charge out of range in '" + std::string(text) + "'");
  return terminal(atom);
}

BondOrder EdgeLabel::bond_order() const {
  if (!is_bond())
    throw std::logic_error("edge label is not a single bond");
  for (int i = 0; i < 3; ++i) {
    if (counts_[i] != 0)
      return static_cast<BondOrder>(i + 1);
  }
  return BondOrder::kSingle;
}

EdgeLabel &EdgeLabel::operator+=(const EdgeLabel &other) {
  for (int i = 0; i < 3; ++i)
    counts_[i] = static_cast<std::uint8_t>(counts_[i] + other.counts_[i]);
  return *this;
}

std::string EdgeLabel::to_string() const {
  if (is_empty())
    return "~";
  std::string s;
  s.append(counts_[0], '-');
  s.append(counts_[1], '=');
  s.append(counts_[2], '#');
  return s;
}

EdgeLabel EdgeLabel::parse(std::string_view text) {
  EdgeLabel l;
  if (text == "~")
    return l;
  if (text.empty())
    throw DataError("empty edge label");
  for (char c: text) {
    switch (c) {
    case '-':
      l += bond(BondOrder::kSingle);
      break;
    case '=':
      l += bond(BondOrder::kDouble);
      break;
    case '#':
      l += bond(BondOrder::kTriple);
      break;
    default:
      throw DataError("unknown edge label '" + std::string(text) + "'");
    }
  }
  return l;
}

NodeId OrderedMolGraph::add_node(NodeLabel label) {
  labels_.push_back(label);
  adj_.emplace_back();
  return size() - 1;
}

void OrderedMolGraph::add_edge(NodeId u, NodeId v, EdgeLabel label) {
  if (u < 0 || v < 0 || u >= size() || v >= size())
    throw std::out_of_range("edge endpoint out of range");
  if (u == v)
    throw std::invalid_argument("self-loop on node " + std::to_string(u));
  if (has_edge(u, v))
    throw std::invalid_argument("parallel edge " + std::to_string(u) + "-"
                                + std::to_string(v));
  adj_[u].push_back({ v, label });
  adj_[v].push_back({ u, label });
}

int OrderedMolGraph::num_edges() const {
  std::size_t twice = 0;
  for (const auto &inc: adj_)
    twice += inc.size();
  return static_cast<int>(twice / 2);
}

std::optional<EdgeLabel> OrderedMolGraph::edge_label(NodeId u,
                                                     NodeId v) const {
  for (const Incidence &inc: adj_[u]) {
    if (inc.neighbor == v)
      return inc.label;
  }
  return std::nullopt;
}

std::vector<Edge> OrderedMolGraph::edges() const {
  std::vector<Edge> out;
  for (NodeId u = 0; u < size(); ++u) {
    for (const Incidence &inc: adj_[u]) {
      if (u < inc.neighbor)
        out.push_back({ u, inc.neighbor, inc.label });
    }
  }
  return out;
}

bool OrderedMolGraph::is_connected() const {
  if (labels_.empty())
    return true;
  std::vector<char> seen(labels_.size(), 0);
  std::vector<NodeId> stack { 0 };
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (const Incidence &inc: adj_[u]) {
      if (!seen[inc.neighbor]) {
        seen[inc.neighbor] = 1;
        ++count;
        stack.push_back(inc.neighbor);
      }
    }
  }
  return count == size();
}

bool OrderedMolGraph::all_terminal() const {
  return std::all_of(labels_.begin(), labels_.end(),
                     [](const NodeLabel &l) { return l.is_terminal(); });
}

void OrderedMolGraph::check_invariants() const {
  for (NodeId u = 0; u < size(); ++u) {
    for (std::size_t i = 0; i < adj_[u].size(); ++i) {
      const Incidence &inc = adj_[u][i];
      if (inc.neighbor < 0 || inc.neighbor >= size())
        throw std::logic_error("dangling edge at node " + std::to_string(u));
      if (inc.neighbor == u)
        throw std::logic_error("self-loop at node " + std::to_string(u));
      for (std::size_t j = i + 1; j < adj_[u].size(); ++j) {
        if (adj_[u][j].neighbor == inc.neighbor)
          throw std::logic_error("parallel edge at node " + std::to_string(u));
      }
      auto back = edge_label(inc.neighbor, u);
      if (!back || *back != inc.label)
        throw std::logic_error("asymmetric edge " + std::to_string(u) + "-"
                               + std::to_string(inc.neighbor));
    }
  }
}

OrderedMolGraph OrderedMolGraph::permuted(std::span<const NodeId> perm) const {
  if (static_cast<int>(perm.size()) != size())
    throw std::invalid_argument("permutation size mismatch");
  std::vector<NodeId> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    inverse[perm[i]] = static_cast<NodeId>(i);

  OrderedMolGraph g;
  g.labels_.reserve(labels_.size());
  g.adj_.resize(adj_.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    g.labels_.push_back(labels_[perm[i]]);
    for (const Incidence &inc: adj_[perm[i]])
      g.adj_[i].push_back({ inverse[inc.neighbor], inc.label });
  }
  return g;
}

}  // namespace molnce
