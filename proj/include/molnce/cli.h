//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_CLI_H_
#define MOLNCE_CLI_H_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "molnce/grammar.h"
#include "molnce/molgraph.h"

namespace molnce {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitEvaluator = 3;

// Flat `key = value` lines; blank lines and lines starting with '#' are
// skipped, and surrounding double quotes are removed from values. Throws
// std::invalid_argument naming the line. Keys are long option names; an
// empty value leaves the option at its default.
std::vector<std::pair<std::string, std::string>> parse_config(std::istream &in);

// One sequence per line as whitespace-separated rule ids.
std::string format_sequence(const RuleSequence &seq);
std::vector<RuleSequence> read_sequences(std::istream &in);  // throws DataError

struct GrammarStats {
  int rule_count = 0;
  int start_rules = 0;
  int simple_rules = 0;
  int complex_rules = 0;
  int molecules = 0;
  int parsed = 0;
  double mean_rules_per_molecule = 0.0;
  int max_rules_per_molecule = 0;
  std::optional<int> held_out;
  std::optional<int> held_out_covered;

  nlohmann::json to_json() const;
};

// Rules per molecule come from parsing the corpus under the fixed grammar;
// molecules it cannot parse are left out of the mean and max.
GrammarStats grammar_stats(const Grammar &grammar,
                           std::span<const OrderedMolGraph> corpus,
                           std::span<const OrderedMolGraph> held_out = {},
                           bool with_held_out = false, int threads = 1);

// args excludes the program name. Machine-readable output goes to out, logs
// and diagnostics to err.
int run_cli(std::span<const std::string> args, std::ostream &out, std::ostream &err);

}  // namespace molnce

#endif  // MOLNCE_CLI_H_
