//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/grammar.h"

#include <algorithm>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "molnce/chem.h"
#include "molnce/error.h"

namespace molnce {
namespace {
void fail(const std::string &reason) {
  throw InvalidRule(reason);
}

int rhs_root(const ProductionRule &rule) {
  if (rule.kind == RuleKind::kStart) {
    for (int v = 0; v < rule.rhs.size(); ++v) {
      if (rule.is_terminal_part(v))
        return v;
    }
    return 0;
  }
  return rule.embedding.front().front().target;
}

std::string serialize(const ProductionRule &rule) {
  std::string out = "k=";
  out += rule_kind_name(rule.kind);
  out += ";l=";
  for (std::size_t i = 0; i < rule.lhs.size(); ++i) {
    if (i)
      out += ',';
    out += rule.lhs[i].to_string();
  }
  out += ";n=";
  for (int v = 0; v < rule.rhs.size(); ++v) {
    if (v)
      out += ',';
    out += rule.rhs.label(v).to_string();
  }
  out += ";a=";
  for (int v = 0; v < rule.rhs.size(); ++v) {
    if (v)
      out += '|';
    bool first = true;
    for (const Incidence &inc: rule.rhs.incident(v)) {
      if (!first)
        out += ' ';
      first = false;
      out += std::to_string(inc.neighbor);
      out += '/';
      out += inc.label.to_string();
    }
  }
  out += ";p=";
  for (std::size_t i = 0; i < rule.embedding.size(); ++i) {
    if (i)
      out += '|';
    bool first = true;
    for (const EmbeddingEdge &e: rule.embedding[i]) {
      if (!first)
        out += ' ';
      first = false;
      out += std::to_string(e.target);
      out += '/';
      out += e.label.to_string();
    }
  }
  return out;
}

RuleKind rule_kind_from_name(std::string_view name) {
  if (name == "start")
    return RuleKind::kStart;
  if (name == "simple")
    return RuleKind::kSimple;
  if (name == "complex")
    return RuleKind::kComplex;
  throw DataError("unknown rule kind: " + std::string(name));
}

nlohmann::json rule_to_json(const ProductionRule &rule) {
  nlohmann::json j;
  j["kind"] = rule_kind_name(rule.kind);
  j["lhs"] = nlohmann::json::array();
  for (const EdgeLabel &l: rule.lhs)
    j["lhs"].push_back(l.to_string());
  j["nodes"] = nlohmann::json::array();
  j["adjacency"] = nlohmann::json::array();
  for (int v = 0; v < rule.rhs.size(); ++v) {
    j["nodes"].push_back(rule.rhs.label(v).to_string());
    nlohmann::json list = nlohmann::json::array();
    for (const Incidence &inc: rule.rhs.incident(v))
      list.push_back({ inc.neighbor, inc.label.to_string() });
    j["adjacency"].push_back(std::move(list));
  }
  j["embedding"] = nlohmann::json::array();
  for (const auto &slot: rule.embedding) {
    nlohmann::json list = nlohmann::json::array();
    for (const EmbeddingEdge &e: slot)
      list.push_back({ e.target, e.label.to_string() });
    j["embedding"].push_back(std::move(list));
  }
  return j;
}

ProductionRule rule_from_json(const nlohmann::json &j) {
  ProductionRule rule;
  rule.kind = rule_kind_from_name(j.at("kind").get<std::string>());
  for (const auto &l: j.at("lhs"))
    rule.lhs.push_back(EdgeLabel::parse(l.get<std::string>()));
  const auto &nodes = j.at("nodes");
  const auto &adjacency = j.at("adjacency");
  if (nodes.size() != adjacency.size())
    throw DataError("rule adjacency does not match node count");
  for (const auto &n: nodes)
    rule.rhs.add_node(NodeLabel::parse(n.get<std::string>()));
  for (std::size_t v = 0; v < adjacency.size(); ++v) {
    auto &list = rule.rhs.mutable_incident(static_cast<NodeId>(v));
    for (const auto &inc: adjacency[v]) {
      const int w = inc.at(0).get<int>();
      if (w < 0 || w >= rule.rhs.size())
        throw DataError("rule adjacency refers to an unknown node");
      list.push_back({ w, EdgeLabel::parse(inc.at(1).get<std::string>()) });
    }
  }
  for (const auto &slot: j.at("embedding")) {
    auto &targets = rule.embedding.emplace_back();
    for (const auto &e: slot)
      targets.push_back(
          { e.at(0).get<int>(), EdgeLabel::parse(e.at(1).get<std::string>()) });
  }
  return rule;
}
}  // namespace

std::string_view rule_kind_name(RuleKind kind) {
  switch (kind) {
  case RuleKind::kStart:
    return "start";
  case RuleKind::kSimple:
    return "simple";
  case RuleKind::kComplex:
    return "complex";
  }
  return "?";
}

int ProductionRule::terminal_part_size() const {
  int n = 0;
  for (int v = 0; v < rhs.size(); ++v)
    n += is_terminal_part(v) ? 1 : 0;
  return n;
}

int ProductionRule::nonterminal_part_size() const {
  return rhs.size() - terminal_part_size();
}

void ProductionRule::validate() const {
  if (rhs.empty())
    fail("empty right-hand side");
  try {
    rhs.check_invariants();
  } catch (const std::logic_error &e) {
    fail(std::string("malformed right-hand side: ") + e.what());
  }
  if (!rhs.is_connected())
    fail("right-hand side is not connected");
  if (embedding.size() != lhs.size())
    fail("embedding does not cover every boundary slot");

  const int t_size = terminal_part_size();
  for (int v = 0; v < rhs.size(); ++v) {
    const NodeKind k = rhs.label(v).kind();
    if (k == NodeKind::kStart)
      fail("start symbol on a right-hand side");
    if (k == NodeKind::kNonterminal) {
      for (const Incidence &inc: rhs.incident(v)) {
        if (!is_terminal_part(inc.neighbor))
          fail("edge between two non-terminals");
      }
    }
  }

  switch (kind) {
  case RuleKind::kStart:
    if (!lhs.empty())
      fail("start rule with boundary slots");
    [[fallthrough]];
  case RuleKind::kSimple:
    if (t_size != 1)
      fail("simple rule with |T_p| != 1");
    for (int v = 0; v < rhs.size(); ++v) {
      if (is_terminal_part(v) && !rhs.label(v).is_terminal())
        fail("simple rule whose T_p node is not an atom");
      for (const Incidence &inc: rhs.incident(v)) {
        if (inc.label.is_empty())
          fail("simple rule with a placeholder edge label");
      }
    }
    break;
  case RuleKind::kComplex:
    if (t_size < 2)
      fail("complex rule with |T_p| < 2");
    for (int v = 0; v < rhs.size(); ++v) {
      if (is_terminal_part(v) && rhs.label(v).kind() != NodeKind::kEmpty)
        fail("complex rule whose T_p node is not a placeholder");
      for (const Incidence &inc: rhs.incident(v)) {
        if (!inc.label.is_empty())
          fail("complex rule with a labeled edge");
      }
    }
    break;
  }
  if (kind != RuleKind::kStart && lhs.empty())
    fail("non-start rule without boundary slots");

  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const auto &targets = embedding[i];
    if (targets.empty())
      fail("boundary slot " + std::to_string(i) + " is not embedded");
    std::set<int> seen;
    EdgeLabel sum;
    for (const EmbeddingEdge &e: targets) {
      if (e.target < 0 || e.target >= rhs.size() || !is_terminal_part(e.target))
        fail("embedding target outside T_p");
      if (!seen.insert(e.target).second)
        fail("repeated embedding target");
      if (e.label.is_empty())
        fail("embedding edge without a label");
      sum += e.label;
    }
    if (lhs[i].is_empty()) {
      if (kind != RuleKind::kSimple || targets.size() != 1)
        fail("placeholder slot must embed into exactly one atom");
    } else {
      for (const EmbeddingEdge &e: targets) {
        if (!e.label.is_bond())
          fail("bundle embedded at a labeled slot");
      }
      if (sum != lhs[i])
        fail("embedding of slot " + std::to_string(i)
             + " does not realize its label");
    }
  }

  if (kind != RuleKind::kComplex) {
    int atom = 0;
    while (!is_terminal_part(atom))
      ++atom;
    int order = 0;
    for (const Incidence &inc: rhs.incident(atom))
      order += inc.label.order_sum();
    for (const auto &targets: embedding)
      order += targets.front().label.order_sum();
    if (implicit_hydrogens(rhs.label(atom).atom(), order) < 0)
      fail("atom " + rhs.label(atom).to_string() + " exceeds its valence");
  }
}

CanonicalRule canonicalize(const ProductionRule &rule) {
  rule.validate();
  const int n = rule.rhs.size();
  std::vector<int> new_index(n, -1);
  std::vector<int> old_index;
  old_index.reserve(n);
  std::function<void(int)> visit = [&](int v) {
    new_index[v] = static_cast<int>(old_index.size());
    old_index.push_back(v);
    for (const Incidence &inc: rule.rhs.incident(v)) {
      if (new_index[inc.neighbor] < 0)
        visit(inc.neighbor);
    }
  };
  visit(rhs_root(rule));

  CanonicalRule out;
  out.rule.kind = rule.kind;
  out.rule.lhs = rule.lhs;
  for (int k = 0; k < n; ++k)
    out.rule.rhs.add_node(rule.rhs.label(old_index[k]));
  for (int k = 0; k < n; ++k) {
    auto &list = out.rule.rhs.mutable_incident(k);
    for (const Incidence &inc: rule.rhs.incident(old_index[k]))
      list.push_back({ new_index[inc.neighbor], inc.label });
  }
  out.rule.embedding = rule.embedding;
  for (auto &slot: out.rule.embedding) {
    for (auto &e: slot)
      e.target = new_index[e.target];
  }
  out.old_index = std::move(old_index);
  return out;
}

std::string canonical_encode(const ProductionRule &rule) {
  return serialize(canonicalize(rule).rule);
}

std::string encode_canonical_form(const ProductionRule &canonical) {
  return serialize(canonical);
}

bool match_context(const OrderedMolGraph &host, NodeId v,
                   const ProductionRule &rule) {
  const NodeKind k = host.label(v).kind();
  if (k == NodeKind::kStart)
    return rule.kind == RuleKind::kStart && host.degree(v) == 0;
  if (k == NodeKind::kTerminal || rule.kind == RuleKind::kStart)
    return false;
  auto star = host.incident(v);
  if (star.size() != rule.lhs.size())
    return false;
  for (std::size_t i = 0; i < star.size(); ++i) {
    if (star[i].label != rule.lhs[i])
      return false;
  }
  return true;
}

std::string star_key(std::span<const EdgeLabel> star) {
  std::string key;
  for (const EdgeLabel &l: star) {
    key += l.to_string();
    key += ',';
  }
  return key;
}

Grammar::Grammar(std::vector<ProductionRule> rules,
                 ChildSequenceTable child_table)
    : rules_(std::move(rules)), child_table_(std::move(child_table)) {
  for (RuleId id = 0; id < size(); ++id) {
    const ProductionRule &r = rules_[id];
    CanonicalRule c = canonicalize(r);
    if (c.rule != r)
      fail("rule " + std::to_string(id) + " is not in canonical form");
    encodings_.push_back(serialize(r));
    if (!by_encoding_.emplace(encodings_.back(), id).second)
      fail("rules " + std::to_string(by_encoding_[encodings_.back()]) + " and "
           + std::to_string(id) + " are identical");
    if (r.kind == RuleKind::kStart)
      start_rules_.push_back(id);
    else
      by_star_[star_key(r.lhs)].push_back(id);
  }
  for (const auto &[parent, tuples]: child_table_) {
    if (parent < 0 || parent >= size() || rules_[parent].kind != RuleKind::kComplex)
      fail("child table entry for a rule that is not complex");
    if (tuples.empty())
      fail("empty child table entry");
    const auto t_size = static_cast<std::size_t>(rules_[parent].terminal_part_size());
    for (const auto &[tuple, count]: tuples) {
      if (tuple.size() != t_size)
        fail("child tuple length differs from |T_p|");
      if (count < 1)
        fail("child tuple with a non-positive count");
      for (RuleId r: tuple) {
        if (r < 0 || r >= size() || rules_[r].kind != RuleKind::kSimple)
          fail("child tuple refers to a rule that is not simple");
      }
    }
  }
  for (RuleId id = 0; id < size(); ++id) {
    if (rules_[id].kind == RuleKind::kComplex && !child_table_.contains(id))
      fail("complex rule " + std::to_string(id) + " has no child tuple");
  }
}

std::optional<RuleId> Grammar::find(const std::string &encoding) const {
  auto it = by_encoding_.find(encoding);
  if (it == by_encoding_.end())
    return std::nullopt;
  return it->second;
}

const std::vector<RuleId> &
Grammar::rules_for_star(std::span<const EdgeLabel> star) const {
  static const std::vector<RuleId> kNone;
  auto it = by_star_.find(star_key(star));
  return it == by_star_.end() ? kNone : it->second;
}

std::vector<RuleId>
Grammar::tuple_continuations(RuleId parent,
                             std::span<const RuleId> prefix) const {
  std::vector<RuleId> out;
  auto it = child_table_.find(parent);
  if (it == child_table_.end())
    return out;
  for (const auto &[tuple, count]: it->second) {
    if (tuple.size() <= prefix.size())
      continue;
    if (std::equal(prefix.begin(), prefix.end(), tuple.begin()))
      out.push_back(tuple[prefix.size()]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int Grammar::count(RuleKind kind) const {
  return static_cast<int>(std::count_if(
      rules_.begin(), rules_.end(),
      [kind](const ProductionRule &r) { return r.kind == kind; }));
}

nlohmann::json Grammar::to_json() const {
  nlohmann::json j;
  j["version"] = kGrammarFormatVersion;
  j["rules"] = nlohmann::json::array();
  for (const ProductionRule &r: rules_)
    j["rules"].push_back(rule_to_json(r));
  j["start_rules"] = start_rules_;
  j["child_table"] = nlohmann::json::array();
  for (const auto &[parent, tuples]: child_table_) {
    nlohmann::json entry;
    entry["parent"] = parent;
    entry["tuples"] = nlohmann::json::array();
    for (const auto &[tuple, count]: tuples)
      entry["tuples"].push_back({ { "rules", tuple }, { "count", count } });
    j["child_table"].push_back(std::move(entry));
  }
  return j;
}

Grammar Grammar::from_json(const nlohmann::json &j) {
  try {
    if (j.at("version").get<int>() != kGrammarFormatVersion)
      throw DataError("unsupported grammar file version");
    std::vector<ProductionRule> rules;
    for (const auto &r: j.at("rules"))
      rules.push_back(rule_from_json(r));
    ChildSequenceTable table;
    for (const auto &entry: j.at("child_table")) {
      auto &tuples = table[entry.at("parent").get<RuleId>()];
      for (const auto &t: entry.at("tuples")) {
        auto key = t.at("rules").get<std::vector<RuleId>>();
        if (!tuples.emplace(std::move(key), t.at("count").get<long>()).second)
          throw DataError("duplicate child tuple");
      }
    }
    Grammar g(std::move(rules), std::move(table));
    if (j.at("start_rules").get<std::vector<RuleId>>() != g.start_rules())
      throw DataError("start rule list does not match the rules");
    return g;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed grammar file: ") + e.what());
  }
}

}  // namespace molnce
