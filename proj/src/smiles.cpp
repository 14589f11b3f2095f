//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/smiles.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "molnce/chem.h"
#include "molnce/error.h"

namespace molnce {
namespace {
struct PendingRing {
  int atom;
  std::size_t slot;  // reserved position in the opener's incident list
  std::optional<BondOrder> order;
  std::size_t position;
};

class SmilesParser {
public:
  explicit SmilesParser(std::string_view text): text_(text) { }

  OrderedMolGraph parse() {
    if (text_.empty())
      throw SyntaxError(0, "empty SMILES");

    std::vector<int> branch_stack;
    int prev = -1;
    std::optional<BondOrder> bond;
    std::size_t bond_pos = 0;

    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(') {
        if (prev < 0)
          throw SyntaxError(pos_, "branch without a preceding atom");
        if (bond)
          throw SyntaxError(pos_, "bond before branch");
        branch_stack.push_back(prev);
        ++pos_;
        if (pos_ < text_.size() && text_[pos_] == ')')
          throw SyntaxError(pos_, "empty branch");
      } else if (c == ')') {
        if (branch_stack.empty())
          throw SyntaxError(pos_, "unbalanced ')'");
        if (bond)
          throw SyntaxError(pos_, "bond at end of branch");
        prev = branch_stack.back();
        branch_stack.pop_back();
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#') {
        if (bond)
          throw SyntaxError(pos_, "two consecutive bonds");
        if (prev < 0)
          throw SyntaxError(pos_, "bond without a preceding atom");
        bond = c == '-' ? BondOrder::kSingle
               : c == '=' ? BondOrder::kDouble
                          : BondOrder::kTriple;
        bond_pos = pos_;
        ++pos_;
      } else if (c == '/' || c == '\\') {
        throw UnsupportedFeature("directional bond '" + std::string(1, c)
                                 + "' at position " + std::to_string(pos_));
      } else if (c == ':') {
        throw UnsupportedFeature("aromatic bond ':' at position "
                                 + std::to_string(pos_));
      } else if (c == '$') {
        throw UnsupportedFeature("quadruple bond '$' at position "
                                 + std::to_string(pos_));
      } else if (c == '.') {
        throw UnsupportedFeature("disconnected structure '.' at position "
                                 + std::to_string(pos_));
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        if (prev < 0)
          throw SyntaxError(pos_, "ring closure without a preceding atom");
        const std::size_t at = pos_;
        const int number = read_ring_number();
        ring_closure(prev, number, bond, at);
        bond.reset();
      } else {
        const std::size_t at = pos_;
        const int atom = read_atom();
        if (prev >= 0) {
          add_bond(prev, atom, bond.value_or(BondOrder::kSingle));
        } else if (bond) {
          throw SyntaxError(bond_pos, "bond without a preceding atom");
        } else if (atoms_.size() > 1) {
          throw SyntaxError(at, "unexpected atom");
        }
        bond.reset();
        prev = atom;
      }
    }

    if (bond)
      throw SyntaxError(bond_pos, "dangling bond at end of input");
    if (!branch_stack.empty())
      throw SyntaxError(text_.size(), "unclosed branch");
    if (!open_rings_.empty()) {
      throw SyntaxError(open_rings_.begin()->second.position,
                        "unclosed ring " + std::to_string(open_rings_.begin()->first));
    }

    OrderedMolGraph g;
    for (const AtomLabel &a: atoms_)
      g.add_node(NodeLabel::terminal(a));
    for (int v = 0; v < g.size(); ++v) {
      auto &inc = g.mutable_incident(v);
      for (const auto &slot: slots_[v])
        inc.push_back(*slot);
    }
    return g;
  }

private:
  int read_ring_number() {
    if (text_[pos_] != '%')
      return text_[pos_++] - '0';
    if (pos_ + 2 >= text_.size()
        || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))
        || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
      throw SyntaxError(pos_, "'%' must be followed by two digits");
    }
    const int n = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
    pos_ += 3;
    return n;
  }

  void ring_closure(int atom, int number, std::optional<BondOrder> order,
                    std::size_t at) {
    auto it = open_rings_.find(number);
    if (it == open_rings_.end()) {
      slots_[atom].emplace_back();
      open_rings_[number] = { atom, slots_[atom].size() - 1, order, at };
      return;
    }
    PendingRing ring = it->second;
    open_rings_.erase(it);
    if (ring.atom == atom)
      throw SyntaxError(at, "ring closure onto the same atom");
    if (order && ring.order && *order != *ring.order)
      throw SyntaxError(at, "conflicting ring-closure bond orders");
    if (has_bond(ring.atom, atom))
      throw SyntaxError(at, "ring closure duplicates an existing bond");
    const EdgeLabel label =
        EdgeLabel::bond(order.value_or(ring.order.value_or(BondOrder::kSingle)));
    slots_[ring.atom][ring.slot] = Incidence { atom, label };
    slots_[atom].push_back(Incidence { ring.atom, label });
  }

  bool has_bond(int u, int v) const {
    return std::any_of(slots_[u].begin(), slots_[u].end(), [&](const auto &s) {
      return s && s->neighbor == v;
    });
  }

  void add_bond(int u, int v, BondOrder order) {
    const EdgeLabel label = EdgeLabel::bond(order);
    slots_[u].push_back(Incidence { v, label });
    slots_[v].push_back(Incidence { u, label });
  }

  int new_atom(const AtomLabel &a) {
    atoms_.push_back(a);
    slots_.emplace_back();
    return static_cast<int>(atoms_.size()) - 1;
  }

  int read_atom() {
    const char c = text_[pos_];
    if (c == '[')
      return read_bracket_atom();
    if (c == '*')
      throw UnsupportedFeature("wildcard atom '*' at position "
                               + std::to_string(pos_));
    if (std::islower(static_cast<unsigned char>(c))) {
      throw UnsupportedFeature("aromatic atom '" + std::string(1, c)
                               + "' at position " + std::to_string(pos_)
                               + " (input must be Kekule)");
    }
    AtomLabel a;
    if (text_.compare(pos_, 2, "Cl") == 0) {
      a.element = Element::kCl;
      pos_ += 2;
    } else if (text_.compare(pos_, 2, "Br") == 0) {
      a.element = Element::kBr;
      pos_ += 2;
    } else {
      auto e = element_from_symbol(text_.substr(pos_, 1));
      if (!e)
        throw SyntaxError(pos_, "unexpected character '" + std::string(1, c) + "'");
      a.element = *e;
      ++pos_;
    }
    return new_atom(a);
  }

  int read_bracket_atom() {
    const std::size_t open = pos_++;
    const std::size_t close = text_.find(']', open);
    if (close == std::string_view::npos)
      throw SyntaxError(open, "unclosed bracket atom");

    if (pos_ < close && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      throw UnsupportedFeature("isotope at position " + std::to_string(pos_));
    if (pos_ < close && text_[pos_] == '*')
      throw UnsupportedFeature("wildcard atom '*' at position "
                               + std::to_string(pos_));
    if (pos_ < close && std::islower(static_cast<unsigned char>(text_[pos_]))) {
      throw UnsupportedFeature("aromatic atom '" + std::string(1, text_[pos_])
                               + "' at position " + std::to_string(pos_)
                               + " (input must be Kekule)");
    }

    AtomLabel a;
    std::size_t len = 0;
    if (pos_ + 1 < close && std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
      // Inside brackets an upper-lower pair is always one symbol.
      if (element_from_symbol(text_.substr(pos_, 2)))
        len = 2;
    } else if (pos_ < close && element_from_symbol(text_.substr(pos_, 1))) {
      len = 1;
    }
    if (len == 0) {
      std::size_t end = pos_ + 1;
      while (end < close && std::islower(static_cast<unsigned char>(text_[end])))
        ++end;
      throw UnsupportedFeature("element '"
                               + std::string(text_.substr(pos_, end - pos_))
                               + "' at position " + std::to_string(pos_)
                               + " is outside the supported set");
    }
    a.element = *element_from_symbol(text_.substr(pos_, len));
    pos_ += len;

    if (pos_ < close && text_[pos_] == '@') {
      ++pos_;
      if (pos_ < close && text_[pos_] == '@') {
        ++pos_;
        a.chirality = Chirality::kCW;
      } else {
        a.chirality = Chirality::kCCW;
      }
      if (pos_ < close && std::isupper(static_cast<unsigned char>(text_[pos_]))
          && text_[pos_] != 'H') {
        throw UnsupportedFeature("extended chirality class at position "
                                 + std::to_string(pos_));
      }
    }

    if (pos_ < close && text_[pos_] == 'H') {
      ++pos_;
      if (pos_ < close && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
    }

    if (pos_ < close && (text_[pos_] == '+' || text_[pos_] == '-')) {
      const char sign = text_[pos_];
      const int s = sign == '+' ? 1 : -1;
      ++pos_;
      int mag = 1;
      if (pos_ < close && text_[pos_] == sign) {
        mag = 2;
        ++pos_;
      } else if (pos_ < close
                 && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        mag = text_[pos_] - '0';
        ++pos_;
      }
      a.charge = s * mag;
      if (a.charge < kMinCharge || a.charge > kMaxCharge)
        throw UnsupportedFeature("charge " + std::to_string(a.charge)
                                 + " outside [-2, +2]");
    }

    if (pos_ < close && text_[pos_] == ':')
      throw UnsupportedFeature("atom class at position " + std::to_string(pos_));
    if (pos_ != close)
      throw SyntaxError(pos_, "unexpected character in bracket atom");
    pos_ = close + 1;
    return new_atom(a);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<AtomLabel> atoms_;
  std::vector<std::vector<std::optional<Incidence>>> slots_;
  std::map<int, PendingRing> open_rings_;
};

std::string bond_symbol(const EdgeLabel &label) {
  switch (label.bond_order()) {
  case BondOrder::kSingle:
    return "";
  case BondOrder::kDouble:
    return "=";
  case BondOrder::kTriple:
    return "#";
  }
  return "";
}

std::string atom_symbol(const OrderedMolGraph &g, NodeId v) {
  const AtomLabel &a = g.label(v).atom();
  if (a.charge == 0 && a.chirality == Chirality::kNone)
    return std::string(element_symbol(a.element));

  std::string s = "[";
  s += element_symbol(a.element);
  if (a.chirality == Chirality::kCCW)
    s += "@";
  else if (a.chirality == Chirality::kCW)
    s += "@@";
  const int h = implicit_hydrogens(a, bond_order_sum(g, v));
  if (h > 0) {
    s += 'H';
    if (h > 1)
      s += std::to_string(h);
  }
  if (a.charge != 0) {
    s += a.charge > 0 ? '+' : '-';
    const int mag = a.charge > 0 ? a.charge : -a.charge;
    if (mag > 1)
      s += std::to_string(mag);
  }
  s += ']';
  return s;
}

std::string ring_label(int digit) {
  if (digit < 10)
    return std::to_string(digit);
  return "%" + std::to_string(digit);
}

class SmilesWriter {
public:
  explicit SmilesWriter(const OrderedMolGraph &g)
      : g_(g), order_(g.size(), -1), parent_(g.size(), -1),
        digit_of_edge_(g.size()) { }

  std::string write() {
    plan(0);
    emit(0);
    return out_;
  }

private:
  // DFS numbering; every non-tree edge becomes a ring closure.
  void plan(NodeId root) {
    int counter = 0;
    std::vector<std::pair<NodeId, std::size_t>> stack { { root, 0 } };
    order_[root] = counter++;
    while (!stack.empty()) {
      auto &[u, i] = stack.back();
      if (i == g_.incident(u).size()) {
        stack.pop_back();
        continue;
      }
      const NodeId w = g_.incident(u)[i++].neighbor;
      if (order_[w] < 0) {
        order_[w] = counter++;
        parent_[w] = u;
        stack.push_back({ w, 0 });
      }
    }
  }

  bool is_tree_edge(NodeId u, NodeId w) const {
    return parent_[w] == u || parent_[u] == w;
  }

  int take_digit() {
    int d = 1;
    while (used_digits_.count(d) != 0)
      ++d;
    if (d > 99)
      throw std::runtime_error("too many open rings for SMILES output");
    used_digits_.insert(d);
    return d;
  }

  void emit(NodeId root) {
    struct Frame {
      NodeId node;
      std::vector<Incidence> children;
      std::size_t next;
    };
    std::vector<Frame> stack;

    auto open_atom = [&](NodeId u) {
      out_ += atom_symbol(g_, u);
      std::vector<Incidence> children;
      for (const Incidence &inc: g_.incident(u)) {
        const NodeId w = inc.neighbor;
        if (is_tree_edge(u, w)) {
          if (parent_[w] == u)
            children.push_back(inc);
          continue;
        }
        auto found = std::find_if(
            digit_of_edge_[w].begin(), digit_of_edge_[w].end(),
            [&](const auto &p) { return p.first == u; });
        if (found != digit_of_edge_[w].end()) {
          out_ += ring_label(found->second);
          used_digits_.erase(found->second);
          digit_of_edge_[w].erase(found);
        } else {
          const int d = take_digit();
          out_ += bond_symbol(inc.label);
          out_ += ring_label(d);
          digit_of_edge_[u].push_back({ w, d });
        }
      }
      stack.push_back({ u, std::move(children), 0 });
    };

    open_atom(root);
    while (!stack.empty()) {
      Frame &f = stack.back();
      if (f.next == f.children.size()) {
        stack.pop_back();
        if (!stack.empty()) {
          Frame &p = stack.back();
          if (p.next < p.children.size())
            out_ += ')';
        }
        continue;
      }
      const Incidence child = f.children[f.next++];
      const bool last = f.next == f.children.size();
      if (!last)
        out_ += '(';
      out_ += bond_symbol(child.label);
      open_atom(child.neighbor);
    }
  }

  const OrderedMolGraph &g_;
  std::vector<int> order_;
  std::vector<NodeId> parent_;
  std::vector<std::vector<std::pair<NodeId, int>>> digit_of_edge_;
  std::set<int> used_digits_;
  std::string out_;
};
}  // namespace

OrderedMolGraph parse_smiles(std::string_view text) {
  return SmilesParser(text).parse();
}

std::string write_smiles(const OrderedMolGraph &g) {
  if (g.empty())
    return "";
  for (NodeId v = 0; v < g.size(); ++v) {
    if (!g.label(v).is_terminal())
      throw NonTerminalPresent("cannot write SMILES for non-terminal node "
                               + std::to_string(v) + " ('"
                               + g.label(v).to_string() + "')");
    for (const Incidence &inc: g.incident(v)) {
      if (!inc.label.is_bond())
        throw NonTerminalPresent("cannot write SMILES for edge label '"
                                 + inc.label.to_string() + "'");
    }
  }
  if (!g.is_connected())
    throw DisconnectedInput("cannot write SMILES for a disconnected graph");
  return SmilesWriter(g).write();
}

}  // namespace molnce
