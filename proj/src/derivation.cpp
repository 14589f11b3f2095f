//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/derivation.h"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

#include "molnce/chem.h"
#include "molnce/error.h"

namespace molnce {

DerivationState::DerivationState() {
  graph_.add_node(NodeLabel::start());
  agenda_.push_back({ 0, NodeKind::kStart, clock_++, -1, -1 });
}

const AgendaEntry &focus_entry(const DerivationState &state) {
  const auto &agenda = state.agenda();
  if (agenda.empty())
    throw NoPendingNonterminal("derivation has no pending non-terminal");
  const AgendaEntry *best = nullptr;
  auto rank = [](NodeKind k) {
    return k == NodeKind::kEmpty ? 2 : k == NodeKind::kNonterminal ? 1 : 0;
  };
  for (const AgendaEntry &e: agenda) {
    if (!best || rank(e.kind) > rank(best->kind)
        || (rank(e.kind) == rank(best->kind) && e.timestamp > best->timestamp))
      best = &e;
  }
  return *best;
}

NodeId next_nonterminal(const DerivationState &state) {
  return focus_entry(state).node;
}

std::vector<RuleId> legal_rules(const Grammar &grammar,
                                const DerivationState &state) {
  const AgendaEntry &focus = focus_entry(state);
  const OrderedMolGraph &g = state.graph();
  if (focus.kind == NodeKind::kStart)
    return state.steps() == 0 ? grammar.start_rules() : std::vector<RuleId> {};

  std::vector<EdgeLabel> star;
  for (const Incidence &inc: g.incident(focus.node))
    star.push_back(inc.label);
  const auto &matching = grammar.rules_for_star(star);
  if (focus.kind == NodeKind::kNonterminal)
    return matching;

  const SiblingFrame &frame = state.frames().at(focus.frame);
  std::vector<RuleId> out;
  for (RuleId r: grammar.tuple_continuations(frame.parent_rule, frame.assigned)) {
    if (std::binary_search(matching.begin(), matching.end(), r))
      out.push_back(r);
  }
  return out;
}

bool is_legal(const Grammar &grammar, const DerivationState &state, RuleId id) {
  auto legal = legal_rules(grammar, state);
  return std::binary_search(legal.begin(), legal.end(), id);
}

std::vector<NodeId> apply_production(DerivationState &state,
                                     const ProductionRule &rule, RuleId id) {
  const AgendaEntry focus = focus_entry(state);
  const NodeId v = focus.node;
  OrderedMolGraph &g = state.graph_;
  if (!match_context(g, v, rule))
    throw IllegalRule("rule " + std::to_string(id)
                      + " does not match the context of node "
                      + std::to_string(v));
  if (focus.kind == NodeKind::kEmpty && rule.kind != RuleKind::kSimple)
    throw IllegalRule("placeholder rewritten by a rule that is not simple");

  const int before = static_cast<int>(state.agenda_.size());
  const std::vector<Incidence> star(g.incident(v).begin(), g.incident(v).end());

  // RHS node 0 takes over the id of the rewritten node.
  std::vector<NodeId> host(rule.rhs.size());
  host[0] = v;
  g.set_label(v, rule.rhs.label(0));
  for (int k = 1; k < rule.rhs.size(); ++k)
    host[k] = g.add_node(rule.rhs.label(k));

  // Former neighbors: the edge to v is replaced in place by the embedding.
  for (std::size_t i = 0; i < star.size(); ++i) {
    auto &list = g.mutable_incident(star[i].neighbor);
    auto it = std::find_if(list.begin(), list.end(),
                           [v](const Incidence &inc) { return inc.neighbor == v; });
    if (it == list.end())
      throw AgendaCorruption("host graph lost the edge to the focus node");
    std::vector<Incidence> replacement;
    for (const EmbeddingEdge &e: rule.embedding[i])
      replacement.push_back({ host[e.target], e.label });
    it = list.erase(it);
    list.insert(it, replacement.begin(), replacement.end());
  }

  // New nodes: RHS edges first, then embedding edges in slot order.
  g.mutable_incident(v).clear();
  for (int k = 0; k < rule.rhs.size(); ++k) {
    auto &list = g.mutable_incident(host[k]);
    for (const Incidence &inc: rule.rhs.incident(k))
      list.push_back({ host[inc.neighbor], inc.label });
    for (std::size_t i = 0; i < star.size(); ++i) {
      for (const EmbeddingEdge &e: rule.embedding[i]) {
        if (e.target == k)
          list.push_back({ star[i].neighbor, e.label });
      }
    }
  }

  // Agenda bookkeeping.
  auto &agenda = state.agenda_;
  agenda.erase(std::find(agenda.begin(), agenda.end(), focus));
  if (focus.frame >= 0)
    state.frames_[focus.frame].assigned.push_back(id);
  const int step = state.steps();
  int frame = -1;
  if (rule.kind == RuleKind::kComplex) {
    frame = static_cast<int>(state.frames_.size());
    state.frames_.push_back({ id, rule.terminal_part_size(), {} });
  }
  for (int k = 0; k < rule.rhs.size(); ++k) {
    const NodeKind kind = rule.rhs.label(k).kind();
    if (kind == NodeKind::kNonterminal)
      agenda.push_back({ host[k], kind, state.clock_++, step, -1 });
    else if (kind == NodeKind::kEmpty)
      agenda.push_back({ host[k], kind, state.clock_++, step, frame });
  }
  state.sequence_.push_back(id);
  state.step_parents_.push_back(focus.parent_step);

  const int t = rule.terminal_part_size(), n = rule.nonterminal_part_size();
  const int expected = rule.kind == RuleKind::kComplex ? t + n - 1 : n - 1;
  if (static_cast<int>(agenda.size()) - before != expected)
    throw AgendaCorruption("unexpected change in the number of non-terminals");
  return host;
}

void apply_rule_in_place(const Grammar &grammar, DerivationState &state,
                         RuleId id) {
  if (id < 0 || id >= grammar.size())
    throw IllegalRule("unknown rule id " + std::to_string(id));
  if (!is_legal(grammar, state, id))
    throw IllegalRule("rule " + std::to_string(id) + " is not legal here");
  apply_production(state, grammar.rule(id), id);
}

DerivationState apply_rule(const Grammar &grammar, const DerivationState &state,
                           RuleId id) {
  DerivationState next = state;
  apply_rule_in_place(grammar, next, id);
  return next;
}

OrderedMolGraph decode(const Grammar &grammar, const RuleSequence &seq) {
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
  if (!state.complete())
    throw IncompleteDerivation(std::to_string(state.agenda().size())
                               + " non-terminals left after "
                               + std::to_string(seq.size()) + " rules");
  auto report = validate_valence(state.graph());
  if (!report.valid)
    throw std::logic_error("decoded molecule violates valence: "
                           + report.violations.front().second);
  return state.graph();
}

void EnvConfig::validate() const {
  if (t_max < 1)
    throw std::invalid_argument("t_max must be at least 1");
  if (l_max && *l_max < 1)
    throw std::invalid_argument("l_max must be at least 1");
  if (r_incomp > 0)
    throw std::invalid_argument("r_incomp must be non-positive");
}

int EnvConfig::step_limit() const {
  return l_max ? std::min(t_max, *l_max) : t_max;
}

std::string_view outcome_name(Outcome outcome) {
  switch (outcome) {
  case Outcome::kComplete:
    return "complete";
  case Outcome::kIncomplete:
    return "incomplete";
  case Outcome::kDeadEnd:
    return "dead_end";
  case Outcome::kLimit:
    return "limit";
  }
  return "?";
}

SampleResult sample_random(const Grammar &grammar, std::uint64_t seed,
                           const EnvConfig &config) {
  config.validate();
  if (grammar.empty())
    throw std::invalid_argument("sampling from an empty grammar");
  std::mt19937_64 rng(seed);
  DerivationState state;
  SampleResult result { Outcome::kComplete, std::nullopt, {} };
  while (!state.complete()) {
    if (state.steps() >= config.step_limit()) {
      result.outcome = Outcome::kLimit;
      break;
    }
    auto legal = legal_rules(grammar, state);
    if (legal.empty()) {
      result.outcome = Outcome::kDeadEnd;
      break;
    }
    std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
    const RuleId r = legal[pick(rng)];
    apply_production(state, grammar.rule(r), r);
  }
  result.sequence = state.sequence();
  if (state.complete())
    result.molecule = state.graph();
  return result;
}

}  // namespace molnce
