//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/inference.h"

#include <algorithm>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "molnce/derivation.h"
#include "molnce/error.h"

namespace molnce {
namespace {
ParseTree tree_from_state(const DerivationState &state) {
  ParseTree tree;
  const auto &seq = state.sequence();
  const auto &parents = state.step_parents();
  tree.nodes.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    tree.nodes.push_back({ seq[i], {} });
    if (parents[i] >= 0)
      tree.nodes[parents[i]].children.push_back(static_cast<int>(i));
  }
  return tree;
}

// Runs the rule extraction in lock-step with a real derivation, so the rule
// recorded at every step is exactly the rule the derivation applies to the
// non-terminal it would rewrite next.
class Parser {
public:
  Parser(const OrderedMolGraph &mol, GrammarBuilder &builder)
      : mol_(mol), builder_(builder), atom_comp_(mol.size(), 0),
        t_index_(mol.size(), -1) { }

  ParseTree run(NodeId root) {
    host_atom_.assign(1, -1);
    host_comp_.assign(1, 0);
    comp_count_ = 1;
    while (!state_.complete()) {
      const AgendaEntry focus = focus_entry(state_);
      Extracted ex = focus.kind == NodeKind::kEmpty
                         ? extract_atom(focus.node)
                         : extract_region(focus, root);
      step(focus, ex);
    }
    return tree_from_state(state_);
  }

private:
  struct Extracted {
    ProductionRule rule;
    std::vector<int> atom;  // per RHS node: molecule atom or -1
    std::vector<int> comp;  // per RHS node: fragment id or -1
  };

  EdgeLabel bonds_into(NodeId a, int comp) const {
    EdgeLabel sum;
    for (const Incidence &inc: mol_.incident(a)) {
      if (atom_comp_[inc.neighbor] == comp)
        sum += inc.label;
    }
    return sum;
  }

  // Rule for the start symbol or an x node standing for fragment `comp`.
  Extracted extract_region(const AgendaEntry &focus, NodeId root) {
    const OrderedMolGraph &host = state_.graph();
    const int comp = host_comp_[focus.node];
    Extracted ex;
    ProductionRule &rule = ex.rule;

    std::vector<NodeId> boundary;
    std::vector<NodeId> t_part;
    if (focus.kind == NodeKind::kStart) {
      rule.kind = RuleKind::kStart;
      t_part.push_back(root);
    } else {
      for (const Incidence &inc: host.incident(focus.node)) {
        if (!host.label(inc.neighbor).is_terminal())
          throw AgendaCorruption("fragment rewritten before its boundary");
        rule.lhs.push_back(inc.label);
        boundary.push_back(host_atom_[inc.neighbor]);
      }
      for (NodeId b: boundary) {
        for (const Incidence &inc: mol_.incident(b)) {
          if (atom_comp_[inc.neighbor] == comp
              && std::find(t_part.begin(), t_part.end(), inc.neighbor)
                     == t_part.end())
            t_part.push_back(inc.neighbor);
        }
      }
      std::sort(t_part.begin(), t_part.end());
      rule.kind = t_part.size() == 1 ? RuleKind::kSimple : RuleKind::kComplex;
    }
    const bool simple = rule.kind != RuleKind::kComplex;
    const int t_size = static_cast<int>(t_part.size());
    for (int i = 0; i < t_size; ++i) {
      t_index_[t_part[i]] = i;
      atom_comp_[t_part[i]] = -1;
    }

    // Fragments of the remainder, each becoming one x node.
    const int first_child = comp_count_;
    std::vector<NodeId> queue;
    for (NodeId t: t_part) {
      for (const Incidence &inc: mol_.incident(t)) {
        if (atom_comp_[inc.neighbor] != comp)
          continue;
        const int id = comp_count_++;
        queue.assign(1, inc.neighbor);
        atom_comp_[inc.neighbor] = id;
        for (std::size_t head = 0; head < queue.size(); ++head) {
          for (const Incidence &next: mol_.incident(queue[head])) {
            if (atom_comp_[next.neighbor] == comp) {
              atom_comp_[next.neighbor] = id;
              queue.push_back(next.neighbor);
            }
          }
        }
      }
    }
    const int children = comp_count_ - first_child;

    for (NodeId t: t_part) {
      rule.rhs.add_node(simple ? NodeLabel::terminal(mol_.label(t).atom())
                               : NodeLabel::empty());
      ex.atom.push_back(t);
      ex.comp.push_back(-1);
    }
    for (int k = 0; k < children; ++k) {
      rule.rhs.add_node(NodeLabel::nonterminal());
      ex.atom.push_back(-1);
      ex.comp.push_back(first_child + k);
    }
    for (int i = 0; i < t_size; ++i) {
      const NodeId t = t_part[i];
      std::vector<char> linked(children, 0);
      for (const Incidence &inc: mol_.incident(t)) {
        const NodeId w = inc.neighbor;
        if (t_index_[w] >= 0) {
          rule.rhs.mutable_incident(i).push_back({ t_index_[w], EdgeLabel::empty() });
        } else if (atom_comp_[w] >= first_child) {
          const int k = atom_comp_[w] - first_child;
          if (linked[k])
            continue;
          linked[k] = 1;
          const EdgeLabel l = simple ? bonds_into(t, atom_comp_[w]) : EdgeLabel::empty();
          rule.rhs.mutable_incident(i).push_back({ t_size + k, l });
          rule.rhs.mutable_incident(t_size + k).push_back({ i, l });
        }
      }
    }

    for (std::size_t s = 0; s < boundary.size(); ++s) {
      auto &targets = rule.embedding.emplace_back();
      EdgeLabel sum;
      for (const Incidence &inc: mol_.incident(boundary[s])) {
        if (t_index_[inc.neighbor] >= 0) {
          targets.push_back({ t_index_[inc.neighbor], inc.label });
          sum += inc.label;
        }
      }
      if (sum != rule.lhs[s])
        throw AgendaCorruption("boundary label disagrees with the molecule");
    }
    for (NodeId t: t_part)
      t_index_[t] = -1;
    return ex;
  }

  // Simple rule filling the placeholder at host node v.
  Extracted extract_atom(NodeId v) {
    const OrderedMolGraph &host = state_.graph();
    const NodeId a = host_atom_[v];
    Extracted ex;
    ProductionRule &rule = ex.rule;
    rule.kind = RuleKind::kSimple;
    rule.rhs.add_node(NodeLabel::terminal(mol_.label(a).atom()));
    ex.atom.push_back(a);
    ex.comp.push_back(-1);
    for (const Incidence &inc: host.incident(v)) {
      const NodeId u = inc.neighbor;
      EdgeLabel l = host.label(u).kind() == NodeKind::kNonterminal
                        ? bonds_into(a, host_comp_[u])
                        : *mol_.edge_label(a, host_atom_[u]);
      if (!inc.label.is_empty() && inc.label != l)
        throw AgendaCorruption("placeholder context disagrees with the molecule");
      rule.lhs.push_back(inc.label);
      rule.embedding.push_back({ { 0, l } });
    }
    return ex;
  }

  void step(const AgendaEntry &focus, const Extracted &ex) {
    CanonicalRule canon = canonicalize(ex.rule);
    auto id = builder_.intern(canon.rule);
    if (!id)
      throw NotCovered("no rule for the context at step "
                       + std::to_string(state_.steps()));
    if (focus.frame >= 0) {
      const SiblingFrame &frame = state_.frames()[focus.frame];
      if (!builder_.allows(frame.parent_rule, frame.assigned, *id))
        throw NotCovered("unobserved child sequence at step "
                         + std::to_string(state_.steps()));
    }
    auto host = apply_production(state_, canon.rule, *id);
    host_atom_.resize(state_.graph().size(), -1);
    host_comp_.resize(state_.graph().size(), -1);
    for (std::size_t k = 0; k < host.size(); ++k) {
      host_atom_[host[k]] = ex.atom[canon.old_index[k]];
      host_comp_[host[k]] = ex.comp[canon.old_index[k]];
    }
    if (focus.frame >= 0) {
      const SiblingFrame &frame = state_.frames()[focus.frame];
      if (static_cast<int>(frame.assigned.size()) == frame.size)
        builder_.record_tuple(frame.parent_rule, frame.assigned);
    }
  }

  const OrderedMolGraph &mol_;
  GrammarBuilder &builder_;
  DerivationState state_;
  std::vector<int> host_atom_;
  std::vector<int> host_comp_;
  std::vector<int> atom_comp_;  // fragment holding each unplaced atom, else -1
  std::vector<int> t_index_;
  int comp_count_ = 0;
};
}  // namespace

RuleSequence preorder(const ParseTree &tree) {
  RuleSequence out;
  if (tree.nodes.empty())
    return out;
  std::vector<int> stack { 0 };
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    out.push_back(tree.nodes[v].rule);
    const auto &ch = tree.nodes[v].children;
    stack.insert(stack.end(), ch.rbegin(), ch.rend());
  }
  return out;
}

ParseTree tree_from_sequence(const Grammar &grammar, const RuleSequence &seq) {
  DerivationState state;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (state.complete())
      throw IllegalSequence(i, "the derivation is already complete");
    if (seq[i] < 0 || seq[i] >= grammar.size())
      throw IllegalSequence(i, "unknown rule id " + std::to_string(seq[i]));
    if (!is_legal(grammar, state, seq[i]))
      throw IllegalSequence(i, "rule " + std::to_string(seq[i])
                                   + " does not apply to the pending node");
    apply_production(state, grammar.rule(seq[i]), seq[i]);
  }
  return tree_from_state(state);
}

void remap_rules(ParseTree &tree, std::span<const RuleId> remap) {
  for (auto &node: tree.nodes)
    node.rule = remap[node.rule];
}

int GrammarBuilder::size() const {
  return frozen_ ? frozen_->size() : static_cast<int>(rules_.size());
}

std::optional<RuleId> GrammarBuilder::intern(const ProductionRule &canonical) {
  std::string enc = encode_canonical_form(canonical);
  if (frozen_)
    return frozen_->find(enc);
  auto [it, inserted] = index_.try_emplace(enc, static_cast<RuleId>(rules_.size()));
  if (inserted) {
    rules_.push_back(canonical);
    encodings_.push_back(std::move(enc));
  }
  return it->second;
}

bool GrammarBuilder::allows(RuleId parent, std::span<const RuleId> prefix,
                            RuleId next) const {
  if (!frozen_)
    return true;
  auto cont = frozen_->tuple_continuations(parent, prefix);
  return std::binary_search(cont.begin(), cont.end(), next);
}

void GrammarBuilder::record_tuple(RuleId parent,
                                  const std::vector<RuleId> &tuple) {
  if (!frozen_)
    ++tuples_[parent][tuple];
}

std::vector<RuleId> GrammarBuilder::merge(const GrammarBuilder &other) {
  if (frozen_ || other.frozen_)
    throw std::logic_error("merging a frozen grammar builder");
  std::vector<RuleId> map;
  map.reserve(other.rules_.size());
  for (const ProductionRule &r: other.rules_)
    map.push_back(*intern(r));
  for (const auto &[parent, tuples]: other.tuples_) {
    auto &mine = tuples_[map[parent]];
    for (const auto &[tuple, count]: tuples) {
      std::vector<RuleId> t;
      for (RuleId r: tuple)
        t.push_back(map[r]);
      mine[t] += count;
    }
  }
  return map;
}

Grammar GrammarBuilder::finalize(std::vector<RuleId> *remap) const {
  if (frozen_)
    throw std::logic_error("finalizing a frozen grammar builder");
  std::vector<RuleId> order(rules_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](RuleId a, RuleId b) { return encodings_[a] < encodings_[b]; });
  std::vector<RuleId> map(rules_.size());
  std::vector<ProductionRule> rules;
  for (std::size_t k = 0; k < order.size(); ++k) {
    map[order[k]] = static_cast<RuleId>(k);
    rules.push_back(rules_[order[k]]);
  }
  ChildSequenceTable table;
  for (const auto &[parent, tuples]: tuples_) {
    auto &mine = table[map[parent]];
    for (const auto &[tuple, count]: tuples) {
      std::vector<RuleId> t;
      for (RuleId r: tuple)
        t.push_back(map[r]);
      mine[t] += count;
    }
  }
  if (remap)
    *remap = map;
  return Grammar(std::move(rules), std::move(table));
}

ParseTree parse_molecule(const OrderedMolGraph &g, GrammarBuilder &builder,
                         NodeId root) {
  if (g.empty())
    throw DataError("empty molecule");
  if (root < 0 || root >= g.size())
    throw std::out_of_range("parse root outside the molecule");
  if (!g.all_terminal())
    throw NonTerminalPresent("molecule contains non-terminal labels");
  for (const Edge &e: g.edges()) {
    if (!e.label.is_bond())
      throw DataError("molecule edge without a bond order");
  }
  if (!g.is_connected())
    throw DisconnectedInput("molecule is not connected");
  return Parser(g, builder).run(root);
}

nlohmann::json InferenceStats::to_json() const {
  nlohmann::json j;
  j["rule_count"] = rule_count;
  j["molecules_parsed"] = molecules_parsed;
  j["molecules_failed"] = molecules_failed;
  j["max_rules_per_molecule"] = max_rules_per_molecule;
  j["mean_rules_per_molecule"] = mean_rules_per_molecule;
  j["failures"] = nlohmann::json::array();
  for (const auto &[index, reason]: failures)
    j["failures"].push_back({ { "index", index }, { "reason", reason } });
  return j;
}

InferenceResult infer_grammar(std::span<const OrderedMolGraph> corpus,
                              bool multi_root, int threads) {
  if (corpus.empty())
    throw std::invalid_argument("empty corpus");
  const int n = static_cast<int>(corpus.size());
  threads = std::clamp(threads, 1, n);

  struct Chunk {
    GrammarBuilder builder;
    std::vector<ParseTree> trees;
    std::vector<int> molecule, root;
    std::vector<std::pair<int, std::string>> failures;
    std::exception_ptr error;
  };
  std::vector<Chunk> chunks(threads);

  auto work = [&](int c) {
    Chunk &chunk = chunks[c];
    const int begin = static_cast<int>(static_cast<long>(n) * c / threads);
    const int end = static_cast<int>(static_cast<long>(n) * (c + 1) / threads);
    try {
      for (int i = begin; i < end; ++i) {
        const OrderedMolGraph &mol = corpus[i];
        const int roots = multi_root ? mol.size() : 1;
        for (NodeId r = 0; r < std::max(roots, 1); ++r) {
          GrammarBuilder scratch;
          ParseTree tree;
          try {
            tree = parse_molecule(mol, scratch, r);
          } catch (const Error &e) {
            if (r == 0) {
              chunk.failures.emplace_back(i, e.what());
              break;
            }
            continue;
          }
          remap_rules(tree, chunk.builder.merge(scratch));
          chunk.trees.push_back(std::move(tree));
          chunk.molecule.push_back(i);
          chunk.root.push_back(r);
        }
      }
    } catch (...) {
      chunk.error = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int c = 0; c < threads; ++c)
      pool.emplace_back(work, c);
    for (auto &t: pool)
      t.join();
  }

  InferenceResult result;
  GrammarBuilder total;
  for (Chunk &chunk: chunks) {
    if (chunk.error)
      std::rethrow_exception(chunk.error);
    auto map = total.merge(chunk.builder);
    for (auto &tree: chunk.trees) {
      remap_rules(tree, map);
      result.trees.push_back(std::move(tree));
    }
    result.tree_molecule.insert(result.tree_molecule.end(),
                                chunk.molecule.begin(), chunk.molecule.end());
    result.tree_root.insert(result.tree_root.end(), chunk.root.begin(),
                            chunk.root.end());
    result.stats.failures.insert(result.stats.failures.end(),
                                 chunk.failures.begin(), chunk.failures.end());
  }
  std::vector<RuleId> final_ids;
  result.grammar = total.finalize(&final_ids);
  for (auto &tree: result.trees)
    remap_rules(tree, final_ids);

  InferenceStats &stats = result.stats;
  stats.rule_count = result.grammar.size();
  stats.molecules_failed = static_cast<int>(stats.failures.size());
  stats.molecules_parsed = n - stats.molecules_failed;
  long total_rules = 0;
  for (std::size_t k = 0; k < result.trees.size(); ++k) {
    if (result.tree_root[k] != 0)
      continue;
    total_rules += result.trees[k].size();
    stats.max_rules_per_molecule =
        std::max(stats.max_rules_per_molecule, result.trees[k].size());
  }
  if (stats.molecules_parsed > 0)
    stats.mean_rules_per_molecule =
        static_cast<double>(total_rules) / stats.molecules_parsed;
  return result;
}

Coverage coverage(const Grammar &grammar,
                  std::span<const OrderedMolGraph> held_out) {
  Coverage out;
  GrammarBuilder frozen(grammar);
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    try {
      parse_molecule(held_out[i], frozen, 0);
      ++out.covered;
    } catch (const Error &) {
      ++out.uncovered;
      out.uncovered_indices.push_back(static_cast<int>(i));
    }
  }
  return out;
}

}  // namespace molnce
