//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/isomorphism.h"

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "molnce/hashing.h"

namespace molnce {
namespace {
using internal::hash_combine;

std::uint64_t node_code(const NodeLabel &l) {
  std::uint64_t code = static_cast<std::uint64_t>(l.kind()) << 32;
  if (l.is_terminal()) {
    code |= static_cast<std::uint64_t>(l.atom().element) << 16;
    code |= static_cast<std::uint64_t>(l.atom().charge - kMinCharge) << 8;
    code |= static_cast<std::uint64_t>(l.atom().chirality);
  }
  return code;
}

std::uint64_t edge_code(const EdgeLabel &l) {
  return static_cast<std::uint64_t>(l.count(BondOrder::kSingle))
         | static_cast<std::uint64_t>(l.count(BondOrder::kDouble)) << 8
         | static_cast<std::uint64_t>(l.count(BondOrder::kTriple)) << 16;
}

// Colors of several graphs refined together so that class ids are
// comparable between them.
class JointRefinement {
public:
  explicit JointRefinement(std::vector<const OrderedMolGraph *> graphs)
      : graphs_(std::move(graphs)) {
    std::map<std::uint64_t, int> ids;
    colors_.resize(graphs_.size());
    for (std::size_t k = 0; k < graphs_.size(); ++k) {
      const OrderedMolGraph &g = *graphs_[k];
      for (NodeId v = 0; v < g.size(); ++v) {
        std::vector<std::uint64_t> edge_labels;
        for (const Incidence &inc: g.incident(v))
          edge_labels.push_back(edge_code(inc.label));
        std::sort(edge_labels.begin(), edge_labels.end());
        std::uint64_t h = hash_combine(node_code(g.label(v)), g.degree(v));
        for (auto e: edge_labels)
          h = hash_combine(h, e);
        colors_[k].push_back(intern(ids, h));
      }
    }
    classes_ = static_cast<int>(ids.size());
    refine();
  }

  const std::vector<int> &colors(std::size_t k) const { return colors_[k]; }

private:
  static int intern(std::map<std::uint64_t, int> &ids, std::uint64_t h) {
    auto [it, inserted] = ids.try_emplace(h, static_cast<int>(ids.size()));
    return it->second;
  }

  void refine() {
    while (true) {
      std::map<std::vector<std::uint64_t>, int> ids;
      std::vector<std::vector<int>> next(graphs_.size());
      for (std::size_t k = 0; k < graphs_.size(); ++k) {
        const OrderedMolGraph &g = *graphs_[k];
        for (NodeId v = 0; v < g.size(); ++v) {
          std::vector<std::uint64_t> sig;
          for (const Incidence &inc: g.incident(v)) {
            sig.push_back((edge_code(inc.label) << 32)
                          | static_cast<std::uint64_t>(colors_[k][inc.neighbor]));
          }
          std::sort(sig.begin(), sig.end());
          sig.push_back(static_cast<std::uint64_t>(colors_[k][v]));
          auto [it, inserted] =
              ids.try_emplace(std::move(sig), static_cast<int>(ids.size()));
          next[k].push_back(it->second);
        }
      }
      const int count = static_cast<int>(ids.size());
      colors_ = std::move(next);
      if (count == classes_)
        break;
      classes_ = count;
    }
  }

  std::vector<const OrderedMolGraph *> graphs_;
  std::vector<std::vector<int>> colors_;
  int classes_ = 0;
};

class Matcher {
public:
  Matcher(const OrderedMolGraph &g1, const OrderedMolGraph &g2,
          const std::vector<int> &c1, const std::vector<int> &c2)
      : g1_(g1), g2_(g2), c1_(c1), c2_(c2), map12_(g1.size(), -1),
        map21_(g2.size(), -1) {
    // Visit order: BFS per component so every node after the first in a
    // component has an already-mapped neighbor.
    std::vector<char> seen(g1.size(), 0);
    for (NodeId s = 0; s < g1.size(); ++s) {
      if (seen[s])
        continue;
      seen[s] = 1;
      std::size_t head = order_.size();
      order_.push_back(s);
      while (head < order_.size()) {
        NodeId u = order_[head++];
        for (const Incidence &inc: g1.incident(u)) {
          if (!seen[inc.neighbor]) {
            seen[inc.neighbor] = 1;
            order_.push_back(inc.neighbor);
          }
        }
      }
    }
  }

  bool run() { return extend(0); }

private:
  bool feasible(NodeId u, NodeId w) const {
    if (c1_[u] != c2_[w])
      return false;
    int mapped = 0;
    for (const Incidence &inc: g1_.incident(u)) {
      const NodeId m = map12_[inc.neighbor];
      if (m < 0)
        continue;
      ++mapped;
      auto label = g2_.edge_label(w, m);
      if (!label || *label != inc.label)
        return false;
    }
    int mapped2 = 0;
    for (const Incidence &inc: g2_.incident(w)) {
      if (map21_[inc.neighbor] >= 0)
        ++mapped2;
    }
    return mapped == mapped2;
  }

  bool extend(std::size_t depth) {
    if (depth == order_.size())
      return true;
    const NodeId u = order_[depth];

    // Candidates: neighbors of the image of a mapped neighbor, or all nodes.
    NodeId anchor = -1;
    for (const Incidence &inc: g1_.incident(u)) {
      if (map12_[inc.neighbor] >= 0) {
        anchor = map12_[inc.neighbor];
        break;
      }
    }
    auto try_candidate = [&](NodeId w) {
      if (map21_[w] >= 0 || !feasible(u, w))
        return false;
      map12_[u] = w;
      map21_[w] = u;
      if (extend(depth + 1))
        return true;
      map12_[u] = -1;
      map21_[w] = -1;
      return false;
    };
    if (anchor >= 0) {
      for (const Incidence &inc: g2_.incident(anchor)) {
        if (try_candidate(inc.neighbor))
          return true;
      }
      return false;
    }
    for (NodeId w = 0; w < g2_.size(); ++w) {
      if (try_candidate(w))
        return true;
    }
    return false;
  }

  const OrderedMolGraph &g1_, &g2_;
  const std::vector<int> &c1_, &c2_;
  std::vector<NodeId> map12_, map21_;
  std::vector<NodeId> order_;
};
}  // namespace

bool is_isomorphic(const OrderedMolGraph &g1, const OrderedMolGraph &g2) {
  if (g1.size() != g2.size() || g1.num_edges() != g2.num_edges())
    return false;
  JointRefinement refinement({ &g1, &g2 });
  std::vector<int> h1 = refinement.colors(0), h2 = refinement.colors(1);
  std::sort(h1.begin(), h1.end());
  std::sort(h2.begin(), h2.end());
  if (h1 != h2)
    return false;
  return Matcher(g1, g2, refinement.colors(0), refinement.colors(1)).run();
}

std::uint64_t invariant_hash(const OrderedMolGraph &g) {
  // Hash-based refinement (not interned) so the digest is comparable across
  // independent calls.
  std::vector<std::uint64_t> colors(g.size());
  for (NodeId v = 0; v < g.size(); ++v)
    colors[v] = hash_combine(node_code(g.label(v)), g.degree(v));
  for (int round = 0; round < 4; ++round) {
    std::vector<std::uint64_t> next(g.size());
    for (NodeId v = 0; v < g.size(); ++v) {
      std::vector<std::uint64_t> sig;
      for (const Incidence &inc: g.incident(v))
        sig.push_back(hash_combine(edge_code(inc.label), colors[inc.neighbor]));
      std::sort(sig.begin(), sig.end());
      std::uint64_t h = colors[v];
      for (auto s: sig)
        h = hash_combine(h, s);
      next[v] = h;
    }
    colors = std::move(next);
  }
  std::sort(colors.begin(), colors.end());
  std::uint64_t h = hash_combine(g.size(), g.num_edges());
  for (auto c: colors)
    h = hash_combine(h, c);
  return h;
}

}  // namespace molnce
