//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_DERIVATION_H_
#define MOLNCE_DERIVATION_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "molnce/grammar.h"
#include "molnce/molgraph.h"

namespace molnce {

struct AgendaEntry {
  NodeId node;
  NodeKind kind;      // kStart, kNonterminal or kEmpty
  long timestamp;
  int parent_step;    // step that created the node, -1 for the start symbol
  int frame;          // sibling frame of an n_sigma node, -1 otherwise

  bool operator==(const AgendaEntry &) const = default;
};

// The T_p placeholders created by one application of a complex rule and the
// simple rules assigned to them so far, in rewrite order.
struct SiblingFrame {
  RuleId parent_rule;
  int size;
  std::vector<RuleId> assigned;

  bool operator==(const SiblingFrame &) const = default;
};

class DerivationState {
public:
  // The bare start symbol.
  DerivationState();

  const OrderedMolGraph &graph() const { return graph_; }
  const std::vector<AgendaEntry> &agenda() const { return agenda_; }
  const std::vector<SiblingFrame> &frames() const { return frames_; }
  const RuleSequence &sequence() const { return sequence_; }
  // Parse-tree parent of each applied step, -1 for the first.
  const std::vector<int> &step_parents() const { return step_parents_; }
  int steps() const { return static_cast<int>(sequence_.size()); }
  bool complete() const { return agenda_.empty(); }

  bool operator==(const DerivationState &) const = default;

private:
  friend std::vector<NodeId> apply_production(DerivationState &state,
                                              const ProductionRule &rule,
                                              RuleId id);

  OrderedMolGraph graph_;
  std::vector<AgendaEntry> agenda_;
  std::vector<SiblingFrame> frames_;
  RuleSequence sequence_;
  std::vector<int> step_parents_;
  long clock_ = 0;
};

// Entry of the non-terminal rewritten next: the latest n_sigma, else the
// latest x, else the start symbol. Throws NoPendingNonterminal.
const AgendaEntry &focus_entry(const DerivationState &state);
NodeId next_nonterminal(const DerivationState &state);

// Sorted ids of the rules that may rewrite the focus non-terminal. Throws
// NoPendingNonterminal.
std::vector<RuleId> legal_rules(const Grammar &grammar,
                                const DerivationState &state);
bool is_legal(const Grammar &grammar, const DerivationState &state, RuleId id);

// One derivation step. Throws IllegalRule when the rule is not legal.
void apply_rule_in_place(const Grammar &grammar, DerivationState &state,
                         RuleId id);
DerivationState apply_rule(const Grammar &grammar, const DerivationState &state,
                           RuleId id);

// Rewrites the focus non-terminal with `rule` recorded under `id`, checking
// only the context match. Returns the host node of every RHS node.
std::vector<NodeId> apply_production(DerivationState &state,
                                     const ProductionRule &rule, RuleId id);

// Throws IllegalSequence, IncompleteDerivation.
OrderedMolGraph decode(const Grammar &grammar, const RuleSequence &seq);

struct EnvConfig {
  int t_max = 200;
  std::optional<int> l_max;
  double r_eps = 0.0;
  double r_incomp = -1.0;

  // Throws std::invalid_argument.
  void validate() const;
  int step_limit() const;
};

enum class Outcome {
  kComplete,
  kIncomplete,  // stopped from outside, e.g. an exhausted evaluation budget
  kDeadEnd,
  kLimit,
};

std::string_view outcome_name(Outcome outcome);

struct SampleResult {
  Outcome outcome;
  std::optional<OrderedMolGraph> molecule;
  RuleSequence sequence;
};

SampleResult sample_random(const Grammar &grammar, std::uint64_t seed,
                           const EnvConfig &config);

}  // namespace molnce

#endif  // MOLNCE_DERIVATION_H_
