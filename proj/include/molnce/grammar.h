//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_GRAMMAR_H_
#define MOLNCE_GRAMMAR_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "molnce/molgraph.h"

namespace molnce {

enum class RuleKind {
  kStart,
  kSimple,
  kComplex,
};

std::string_view rule_kind_name(RuleKind kind);

struct EmbeddingEdge {
  int target;  // RHS node index, always a member of T_p
  EdgeLabel label;

  bool operator==(const EmbeddingEdge &) const = default;
};

// A production p = (alpha, beta, phi).
//
// The LHS alpha is a star around the rewritten non-terminal; it is stored as
// the ordered edge labels of its boundary slots. The RHS beta is an ordered
// graph whose non-x nodes form T_p and whose x nodes form N_p. The embedding
// lists, per boundary slot, the RHS nodes the former neighbor is connected
// to after rewriting; the order of each list is the order in which the new
// edges replace the old one in the neighbor's incident list.
struct ProductionRule {
  RuleKind kind = RuleKind::kSimple;
  std::vector<EdgeLabel> lhs;
  OrderedMolGraph rhs;
  std::vector<std::vector<EmbeddingEdge>> embedding;

  int slot_count() const { return static_cast<int>(lhs.size()); }
  bool is_terminal_part(int rhs_node) const {
    return rhs.label(rhs_node).kind() != NodeKind::kNonterminal;
  }
  int terminal_part_size() const;     // |T_p|
  int nonterminal_part_size() const;  // |N_p|

  // Throws InvalidRule when a structural invariant does not hold.
  void validate() const;

  bool operator==(const ProductionRule &) const = default;
};

struct CanonicalRule {
  ProductionRule rule;
  // old_index[k] is the RHS index in the input rule of canonical node k.
  std::vector<int> old_index;
};

// Renumbers RHS nodes by a depth-first walk over the ordered RHS, starting
// at the first embedding target of slot 0 (or at the single T_p node of a
// start rule). Validates the rule first.
CanonicalRule canonicalize(const ProductionRule &rule);

// Deterministic serialization of the canonical form. Equal iff the rules are
// identical up to renaming of RHS nodes.
std::string canonical_encode(const ProductionRule &rule);

// canonical_encode for a rule already in canonical form, skipping the
// relabeling pass.
std::string encode_canonical_form(const ProductionRule &canonical);

// Whether the ordered star of v in H has the shape of the rule's LHS. The
// start symbol matches start rules only; other non-terminals match non-start
// rules whose slot labels equal the star's edge labels position by position.
bool match_context(const OrderedMolGraph &host, NodeId v,
                   const ProductionRule &rule);

using RuleId = int;
using RuleSequence = std::vector<RuleId>;

// Complex rule -> observed ordered tuples of its per-node simple rules, with
// occurrence counts.
using ChildSequenceTable =
    std::map<RuleId, std::map<std::vector<RuleId>, long>>;

class Grammar {
public:
  Grammar() = default;
  // Rules must already be canonical. Validates every invariant.
  Grammar(std::vector<ProductionRule> rules, ChildSequenceTable child_table);

  int size() const { return static_cast<int>(rules_.size()); }
  bool empty() const { return rules_.empty(); }
  const ProductionRule &rule(RuleId id) const { return rules_.at(id); }
  const std::string &encoding(RuleId id) const { return encodings_.at(id); }
  std::optional<RuleId> find(const std::string &encoding) const;

  const std::vector<RuleId> &start_rules() const { return start_rules_; }
  const ChildSequenceTable &child_table() const { return child_table_; }

  // Non-start rules whose LHS slot labels equal `star`, in id order.
  const std::vector<RuleId> &rules_for_star(std::span<const EdgeLabel> star) const;

  // Simple rules r for which some observed tuple of `parent` starts with
  // `prefix` followed by r.
  std::vector<RuleId> tuple_continuations(RuleId parent,
                                          std::span<const RuleId> prefix) const;

  int count(RuleKind kind) const;

  nlohmann::json to_json() const;
  static Grammar from_json(const nlohmann::json &j);

  bool operator==(const Grammar &other) const {
    return rules_ == other.rules_ && child_table_ == other.child_table_;
  }

private:
  std::vector<ProductionRule> rules_;
  std::vector<std::string> encodings_;
  ChildSequenceTable child_table_;
  std::vector<RuleId> start_rules_;
  std::unordered_map<std::string, RuleId> by_encoding_;
  std::unordered_map<std::string, std::vector<RuleId>> by_star_;
};

inline constexpr int kGrammarFormatVersion = 1;

std::string star_key(std::span<const EdgeLabel> star);

}  // namespace molnce

#endif  // MOLNCE_GRAMMAR_H_
