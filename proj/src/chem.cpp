//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/chem.h"

#include <array>
#include <string>
#include <vector>

#include "molnce/error.h"

namespace molnce {
namespace {
struct ValenceEntry {
  Element element;
  int charge;
  std::array<int, 3> values;
  int count;
};

// Charged states follow the isoelectronic neighbour (N+ like C, O- like F).
constexpr std::array kValenceTable = {
  ValenceEntry { Element::kB, 0, { 3 }, 1 },
  ValenceEntry { Element::kB, -1, { 4 }, 1 },
  ValenceEntry { Element::kB, 1, { 2 }, 1 },
  ValenceEntry { Element::kC, 0, { 4 }, 1 },
  ValenceEntry { Element::kC, 1, { 3 }, 1 },
  ValenceEntry { Element::kC, -1, { 3 }, 1 },
  ValenceEntry { Element::kN, 0, { 3 }, 1 },
  ValenceEntry { Element::kN, 1, { 4 }, 1 },
  ValenceEntry { Element::kN, -1, { 2 }, 1 },
  ValenceEntry { Element::kO, 0, { 2 }, 1 },
  ValenceEntry { Element::kO, 1, { 3 }, 1 },
  ValenceEntry { Element::kO, -1, { 1 }, 1 },
  ValenceEntry { Element::kP, 0, { 3, 5 }, 2 },
  ValenceEntry { Element::kP, 1, { 4 }, 1 },
  ValenceEntry { Element::kS, 0, { 2, 4, 6 }, 3 },
  ValenceEntry { Element::kS, 1, { 3, 5 }, 2 },
  ValenceEntry { Element::kS, -1, { 1, 3, 5 }, 3 },
  ValenceEntry { Element::kF, 0, { 1 }, 1 },
  ValenceEntry { Element::kF, -1, { 0 }, 1 },
  ValenceEntry { Element::kCl, 0, { 1 }, 1 },
  ValenceEntry { Element::kCl, -1, { 0 }, 1 },
  ValenceEntry { Element::kBr, 0, { 1 }, 1 },
  ValenceEntry { Element::kBr, -1, { 0 }, 1 },
  ValenceEntry { Element::kI, 0, { 1 }, 1 },
  ValenceEntry { Element::kI, -1, { 0 }, 1 },
};

constexpr std::array<double, kElementCount> kMasses = {
  10.81,    // B
  12.011,   // C
  14.007,   // N
  15.999,   // O
  30.974,   // P
  32.06,    // S
  18.998,   // F
  35.45,    // Cl
  79.904,   // Br
  126.904,  // I
};
}  // namespace

std::span<const int> allowed_valences(Element element, int charge) {
  for (const ValenceEntry &e: kValenceTable) {
    if (e.element == element && e.charge == charge)
      return { e.values.data(), static_cast<std::size_t>(e.count) };
  }
  return {};
}

int bond_order_sum(const OrderedMolGraph &g, NodeId v) {
  int sum = 0;
  for (const Incidence &inc: g.incident(v))
    sum += inc.label.order_sum();
  return sum;
}

int implicit_hydrogens(const AtomLabel &atom, int sum) {
  for (int valence: allowed_valences(atom.element, atom.charge)) {
    if (valence >= sum)
      return valence - sum;
  }
  return -1;
}

ValidityReport validate_valence(const OrderedMolGraph &g) {
  ValidityReport report;
  for (NodeId v = 0; v < g.size(); ++v) {
    const NodeLabel &label = g.label(v);
    if (!label.is_terminal()) {
      report.violations.emplace_back(v, "non-terminal node '"
                                            + label.to_string() + "'");
      continue;
    }
    bool labels_ok = true;
    for (const Incidence &inc: g.incident(v)) {
      if (!inc.label.is_bond()) {
        report.violations.emplace_back(
            v, "edge label '" + inc.label.to_string() + "' is not a bond");
        labels_ok = false;
        break;
      }
    }
    if (!labels_ok)
      continue;

    const AtomLabel &atom = label.atom();
    auto allowed = allowed_valences(atom.element, atom.charge);
    if (allowed.empty()) {
      report.violations.emplace_back(v, "unsupported charge state "
                                            + to_string(atom));
      continue;
    }
    const int sum = bond_order_sum(g, v);
    if (implicit_hydrogens(atom, sum) < 0) {
      report.violations.emplace_back(
          v, "bond order sum " + std::to_string(sum) + " exceeds valence "
                 + std::to_string(allowed.back()) + " of " + to_string(atom));
    }
  }
  report.valid = report.violations.empty();
  return report;
}

double atomic_mass(Element element) {
  return kMasses[static_cast<int>(element)];
}

double molecular_weight(const OrderedMolGraph &g) {
  double mw = 0;
  for (NodeId v = 0; v < g.size(); ++v) {
    const NodeLabel &label = g.label(v);
    if (!label.is_terminal())
      throw NonTerminalPresent("molecular weight of a non-terminal graph");
    mw += atomic_mass(label.atom().element);
    const int h = implicit_hydrogens(label.atom(), bond_order_sum(g, v));
    if (h > 0)
      mw += h * kHydrogenMass;
  }
  return mw;
}

int ring_count(const OrderedMolGraph &g) {
  std::vector<int> comp(g.size(), -1);
  int components = 0;
  for (NodeId s = 0; s < g.size(); ++s) {
    if (comp[s] >= 0)
      continue;
    std::vector<NodeId> stack { s };
    comp[s] = components;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (const Incidence &inc: g.incident(u)) {
        if (comp[inc.neighbor] < 0) {
          comp[inc.neighbor] = components;
          stack.push_back(inc.neighbor);
        }
      }
    }
    ++components;
  }
  return g.num_edges() - g.size() + components;
}

}  // namespace molnce
