//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_INFERENCE_H_
#define MOLNCE_INFERENCE_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "molnce/grammar.h"
#include "molnce/molgraph.h"

namespace molnce {

struct ParseTree {
  struct Node {
    RuleId rule;
    std::vector<int> children;

    bool operator==(const Node &) const = default;
  };

  // nodes[0] is the root; nodes are stored in preorder.
  std::vector<Node> nodes;

  int size() const { return static_cast<int>(nodes.size()); }
  bool operator==(const ParseTree &) const = default;
};

RuleSequence preorder(const ParseTree &tree);

// Rebuilds the tree by replaying the sequence; each rule becomes a child of
// the rule that created the non-terminal it rewrites. Throws IllegalSequence.
ParseTree tree_from_sequence(const Grammar &grammar, const RuleSequence &seq);

// Replaces every rule id r in the tree by remap[r].
void remap_rules(ParseTree &tree, std::span<const RuleId> remap);

// Accumulates rules and child tuples during inference. An open builder admits
// new rules under provisional ids; a frozen builder resolves rules against a
// fixed grammar and rejects anything the grammar lacks.
class GrammarBuilder {
public:
  GrammarBuilder() = default;
  explicit GrammarBuilder(const Grammar &frozen) : frozen_(&frozen) { }

  bool frozen() const { return frozen_ != nullptr; }
  int size() const;

  // Id of a rule given in canonical form; nullopt when frozen and absent.
  std::optional<RuleId> intern(const ProductionRule &canonical);
  // Whether a simple rule may follow `prefix` under a complex parent.
  bool allows(RuleId parent, std::span<const RuleId> prefix, RuleId next) const;
  void record_tuple(RuleId parent, const std::vector<RuleId> &tuple);

  // Adds everything in `other` (both open). Returns, for each id of `other`,
  // its id in this builder.
  std::vector<RuleId> merge(const GrammarBuilder &other);

  // Grammar with ids ordered by canonical encoding. `remap` receives the
  // final id of every provisional id.
  Grammar finalize(std::vector<RuleId> *remap = nullptr) const;

private:
  const Grammar *frozen_ = nullptr;
  std::vector<ProductionRule> rules_;
  std::vector<std::string> encodings_;
  std::unordered_map<std::string, RuleId> index_;
  ChildSequenceTable tuples_;
};

// Parses g starting at `root`, adding rules to the builder. The returned tree
// uses the builder's ids. Throws DisconnectedInput, NonTerminalPresent,
// InvalidRule (e.g. an atom over its valence) and, for a frozen builder,
// NotCovered.
ParseTree parse_molecule(const OrderedMolGraph &g, GrammarBuilder &builder,
                         NodeId root = 0);

struct InferenceStats {
  int rule_count = 0;
  int molecules_parsed = 0;
  int molecules_failed = 0;
  int max_rules_per_molecule = 0;
  double mean_rules_per_molecule = 0.0;
  std::vector<std::pair<int, std::string>> failures;  // corpus index, reason

  nlohmann::json to_json() const;
};

struct InferenceResult {
  Grammar grammar;
  // For each parsed molecule, the tree rooted at node 0, followed by the
  // other roots when multi_root is set.
  std::vector<ParseTree> trees;
  std::vector<int> tree_molecule;  // corpus index of each tree
  std::vector<int> tree_root;
  InferenceStats stats;
};

// The result does not depend on the thread count.
InferenceResult infer_grammar(std::span<const OrderedMolGraph> corpus,
                              bool multi_root = false, int threads = 1);

struct Coverage {
  int covered = 0;
  int uncovered = 0;
  std::vector<int> uncovered_indices;
};

Coverage coverage(const Grammar &grammar,
                  std::span<const OrderedMolGraph> held_out);

}  // namespace molnce

#endif  // MOLNCE_INFERENCE_H_
