//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/cli.h"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "molnce/chem.h"
#include "molnce/corpus.h"
#include "molnce/derivation.h"
#include "molnce/error.h"
#include "molnce/inference.h"
#include "molnce/parallel.h"
#include "molnce/policy.h"
#include "molnce/rl.h"
#include "molnce/smiles.h"

namespace molnce {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config(std::istream &in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(number)
                                  + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(number)
                                  + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::string format_sequence(const RuleSequence &seq) {
  std::string s;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (k)
      s += ' ';
    s += std::to_string(seq[k]);
  }
  return s;
}

std::vector<RuleSequence> read_sequences(std::istream &in) {
  std::vector<RuleSequence> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (!t.empty() && t[0] == '#')
      continue;
    std::istringstream words(t);
    std::string w;
    RuleSequence seq;
    while (words >> w) {
      std::size_t used = 0;
      long id = -1;
      try {
        id = std::stol(w, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != w.size() || id < 0)
        throw DataError("line " + std::to_string(number) + ": bad rule id '" + w + "'");
      seq.push_back(static_cast<RuleId>(id));
    }
    out.push_back(std::move(seq));
  }
  // A trailing newline is not an extra empty sequence.
  while (!out.empty() && out.back().empty())
    out.pop_back();
  return out;
}

nlohmann::json GrammarStats::to_json() const {
  nlohmann::json j;
  j["rule_count"] = rule_count;
  j["rules"] = { { "start", start_rules },
                 { "simple", simple_rules },
                 { "complex", complex_rules } };
  j["molecules"] = molecules;
  j["parsed"] = parsed;
  j["rules_per_molecule"] = { { "mean", mean_rules_per_molecule },
                              { "max", max_rules_per_molecule } };
  if (held_out) {
    const int n = *held_out, c = held_out_covered.value_or(0);
    j["held_out"] = { { "molecules", n },
                      { "covered", c },
                      { "coverage", n ? static_cast<double>(c) / n : 1.0 } };
  }
  return j;
}

namespace {

// Size of the parse tree, or -1 when the grammar lacks a rule or tuple.
std::vector<int> frozen_parse_sizes(const Grammar &grammar,
                                    std::span<const OrderedMolGraph> mols, int threads) {
  std::vector<int> sizes(mols.size(), -1);
  parallel_for(static_cast<int>(mols.size()), threads, [&](int i) {
    GrammarBuilder frozen(grammar);
    try {
      sizes[i] = parse_molecule(mols[i], frozen, 0).size();
    } catch (const Error &) {
      sizes[i] = -1;
    }
  });
  return sizes;
}

}  // namespace

GrammarStats grammar_stats(const Grammar &grammar,
                           std::span<const OrderedMolGraph> corpus,
                           std::span<const OrderedMolGraph> held_out,
                           bool with_held_out, int threads) {
  GrammarStats s;
  s.rule_count = grammar.size();
  s.start_rules = grammar.count(RuleKind::kStart);
  s.simple_rules = grammar.count(RuleKind::kSimple);
  s.complex_rules = grammar.count(RuleKind::kComplex);
  s.molecules = static_cast<int>(corpus.size());
  long total = 0;
  for (int n: frozen_parse_sizes(grammar, corpus, threads)) {
    if (n < 0)
      continue;
    ++s.parsed;
    total += n;
    s.max_rules_per_molecule = std::max(s.max_rules_per_molecule, n);
  }
  s.mean_rules_per_molecule = s.parsed ? static_cast<double>(total) / s.parsed : 0.0;
  if (with_held_out) {
    s.held_out = static_cast<int>(held_out.size());
    int covered = 0;
    for (int n: frozen_parse_sizes(grammar, held_out, threads))
      covered += n >= 0;
    s.held_out_covered = covered;
  }
  return s;
}

// ------------------------------------------------------------------ commands

namespace {

struct Options {
  // shared
  std::uint64_t seed = 0;
  int threads = 1;
  std::string format = "smiles";
  // files
  std::string corpus, out, grammar, seq, smiles, held_out, policy, trees, log;
  std::string checkpoint_out;
  bool multi_root = false;
  int root = 0;
  // sampling and environment
  int count = 1000;
  int t_max = 200;
  int l_max = 0;
  double r_eps = 0.0;
  double r_incomp = -1.0;
  bool greedy = false;
  // network
  int width = 64;
  int layers = 3;
  double init = 0.1;
  // pretraining
  int pretrain_epochs = 10;
  double pretrain_lr = 1e-3;
  int pretrain_minibatch = 64;
  // PPO
  std::string reward;
  int rounds = 200;
  int batch = 64;
  int epochs = 4;
  int minibatch = 256;
  double lr = 1e-3;
  double momentum = 0.9;
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  double entropy = 0.01;
  double critic_weight = 0.5;
  int budget = 0;
  int top_k = 50;
  int reseed_every = 10;
  int reseed_count = 10;
};

CorpusFormat corpus_format(const Options &o) {
  return o.format == "jsonl" ? CorpusFormat::kJsonLines : CorpusFormat::kSmiles;
}

std::ifstream open_in(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open " + path);
  return in;
}

void write_file(const std::string &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw DataError("cannot write " + path);
  f << text;
  if (!f)
    throw DataError("write failed: " + path);
}

nlohmann::json read_json(const std::string &path) {
  std::ifstream in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path + ": " + e.what());
  }
}

Grammar load_grammar(const std::string &path) {
  try {
    return Grammar::from_json(read_json(path));
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path + ": " + e.what());
  }
}

Checkpoint load_checkpoint(const std::string &path, const Grammar &grammar) {
  Checkpoint c;
  try {
    c = checkpoint_from_json(read_json(path));
  } catch (const nlohmann::json::exception &e) {
    throw DataError(path + ": " + e.what());
  }
  if (!(c.space == FeatureSpace::from_grammar(grammar))
      || c.network.shape().rules != grammar.size())
    throw DataError(path + ": checkpoint does not match the grammar");
  return c;
}

std::string dump_artifact(const nlohmann::json &j) { return j.dump(1) + "\n"; }

EnvConfig env_config(const Options &o) {
  EnvConfig env;
  env.t_max = o.t_max;
  if (o.l_max > 0)
    env.l_max = o.l_max;
  env.r_eps = o.r_eps;
  env.r_incomp = o.r_incomp;
  env.validate();
  return env;
}

PolicyNetwork fresh_network(const Options &o, const FeatureSpace &space,
                            const Grammar &grammar) {
  if (o.width < space.node_dim())
    throw std::invalid_argument("width " + std::to_string(o.width)
                                + " is below the node feature width "
                                + std::to_string(space.node_dim()));
  if (o.layers < 1 || !(o.init > 0.0))
    throw std::invalid_argument("layers must be >= 1 and init > 0");
  PolicyNetwork net(NetworkShape { space.node_dim(), space.edge_channels(), grammar.size(),
                                   o.layers, o.width });
  net.init_uniform(o.init, derive_seed(o.seed, 0x1a17));
  return net;
}

std::vector<RuleSequence> corpus_sequences(const Grammar &grammar,
                                           std::span<const OrderedMolGraph> mols,
                                           int threads) {
  std::vector<RuleSequence> seqs(mols.size());
  std::vector<std::string> errors(mols.size());
  parallel_for(static_cast<int>(mols.size()), threads, [&](int i) {
    GrammarBuilder frozen(grammar);
    try {
      seqs[i] = preorder(parse_molecule(mols[i], frozen, 0));
    } catch (const Error &e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < mols.size(); ++i)
    if (!errors[i].empty())
      throw NotCovered("molecule " + std::to_string(i + 1) + ": " + errors[i]);
  return seqs;
}

int cmd_infer(const Options &o, std::ostream &out) {
  auto corpus = load_corpus(o.corpus, corpus_format(o));
  InferenceResult r = infer_grammar(corpus, o.multi_root, o.threads);
  write_file(o.out, dump_artifact(r.grammar.to_json()));
  if (!o.trees.empty()) {
    std::string text;
    for (const ParseTree &t: r.trees)
      text += format_sequence(preorder(t)) + "\n";
    write_file(o.trees, text);
  }
  out << r.stats.to_json().dump() << "\n";
  return kExitOk;
}

int cmd_parse(const Options &o, std::ostream &out) {
  Grammar grammar = load_grammar(o.grammar);
  std::vector<OrderedMolGraph> mols;
  if (!o.smiles.empty())
    mols.push_back(parse_smiles(o.smiles));
  else
    mols = load_corpus(o.corpus, corpus_format(o));
  std::string text;
  if (o.root == 0) {
    for (const RuleSequence &s: corpus_sequences(grammar, mols, o.threads))
      text += format_sequence(s) + "\n";
  } else {
    for (std::size_t i = 0; i < mols.size(); ++i) {
      if (o.root < 0 || o.root >= mols[i].size())
        throw std::invalid_argument("root " + std::to_string(o.root) + " out of range");
      GrammarBuilder frozen(grammar);
      text += format_sequence(preorder(parse_molecule(mols[i], frozen, o.root))) + "\n";
    }
  }
  if (o.out.empty())
    out << text;
  else
    write_file(o.out, text);
  return kExitOk;
}

int cmd_decode(const Options &o, std::ostream &out) {
  Grammar grammar = load_grammar(o.grammar);
  std::ifstream in = open_in(o.seq);
  std::vector<RuleSequence> seqs = read_sequences(in);
  std::string text;
  for (std::size_t k = 0; k < seqs.size(); ++k) {
    try {
      text += write_smiles(decode(grammar, seqs[k])) + "\n";
    } catch (const Error &e) {
      throw DataError("sequence " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  if (o.out.empty())
    out << text;
  else
    write_file(o.out, text);
  return kExitOk;
}

int cmd_sample(const Options &o, std::ostream &out) {
  if (o.count < 0)
    throw std::invalid_argument("-n must be non-negative");
  Grammar grammar = load_grammar(o.grammar);
  const EnvConfig env = env_config(o);
  std::optional<Checkpoint> ckpt;
  if (!o.policy.empty())
    ckpt = load_checkpoint(o.policy, grammar);

  struct Row {
    Outcome outcome;
    std::optional<OrderedMolGraph> molecule;
    RuleSequence sequence;
  };
  std::vector<Row> rows(o.count);
  parallel_for(o.count, o.threads, [&](int i) {
    const std::uint64_t seed = derive_seed(o.seed, static_cast<std::uint64_t>(i));
    if (ckpt) {
      Trajectory t = rollout(grammar, ckpt->space, ckpt->network, env, seed, o.greedy);
      rows[i] = { t.outcome, t.molecule, t.sequence() };
    } else {
      SampleResult r = sample_random(grammar, seed, env);
      rows[i] = { r.outcome, r.molecule, r.sequence };
    }
  });

  int complete = 0, dead_end = 0, limit = 0, valid = 0;
  for (int i = 0; i < o.count; ++i) {
    const Row &r = rows[i];
    nlohmann::json j;
    j["index"] = i;
    j["outcome"] = std::string(outcome_name(r.outcome));
    j["sequence"] = format_sequence(r.sequence);
    if (r.molecule) {
      const bool ok = validate_valence(*r.molecule).valid;
      j["smiles"] = write_smiles(*r.molecule);
      j["valid"] = ok;
      valid += ok;
    }
    complete += r.outcome == Outcome::kComplete;
    dead_end += r.outcome == Outcome::kDeadEnd;
    limit += r.outcome == Outcome::kLimit;
    out << j.dump() << "\n";
  }
  const double n = std::max(1, o.count);
  nlohmann::json summary = { { "samples", o.count },
                             { "complete", complete },
                             { "dead_end", dead_end },
                             { "limit", limit },
                             { "valid", valid },
                             { "completion_rate", complete / n },
                             { "dead_end_rate", dead_end / n } };
  out << nlohmann::json { { "summary", summary } }.dump() << "\n";
  return kExitOk;
}

int cmd_stats(const Options &o, std::ostream &out) {
  auto corpus = load_corpus(o.corpus, corpus_format(o));
  Grammar grammar = o.grammar.empty() ? infer_grammar(corpus, o.multi_root, o.threads).grammar
                                      : load_grammar(o.grammar);
  std::vector<OrderedMolGraph> held;
  if (!o.held_out.empty())
    held = load_corpus(o.held_out, corpus_format(o));
  GrammarStats s = grammar_stats(grammar, corpus, held, !o.held_out.empty(), o.threads);
  out << s.to_json().dump() << "\n";
  return kExitOk;
}

int cmd_pretrain(const Options &o, std::ostream &out, std::ostream &err) {
  Grammar grammar = load_grammar(o.grammar);
  std::vector<RuleSequence> seqs;
  if (!o.seq.empty()) {
    std::ifstream in = open_in(o.seq);
    seqs = read_sequences(in);
  } else {
    auto corpus = load_corpus(o.corpus, corpus_format(o));
    seqs = corpus_sequences(grammar, corpus, o.threads);
  }
  Checkpoint ckpt;
  if (!o.policy.empty()) {
    ckpt = load_checkpoint(o.policy, grammar);
  } else {
    ckpt.space = FeatureSpace::from_grammar(grammar);
    ckpt.network = fresh_network(o, ckpt.space, grammar);
  }
  PretrainConfig cfg;
  cfg.epochs = o.pretrain_epochs;
  cfg.learning_rate = o.pretrain_lr;
  cfg.momentum = o.momentum;
  cfg.minibatch = o.pretrain_minibatch;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  PretrainReport r = pretrain(ckpt.network, ckpt.space, grammar, seqs, cfg);
  for (std::size_t e = 0; e < r.epoch_nll.size(); ++e)
    err << nlohmann::json { { "epoch", e + 1 }, { "nll", r.epoch_nll[e] } }.dump() << "\n";
  write_file(o.out, dump_artifact(checkpoint_to_json(ckpt)));
  out << nlohmann::json { { "initial_nll", r.initial_nll },
                          { "epoch_nll", r.epoch_nll },
                          { "steps", r.steps },
                          { "sequences", seqs.size() } }
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_optimize(const Options &o, std::ostream &out, std::ostream &err) {
  RewardSpec spec = RewardSpec::parse(o.reward);
  Grammar grammar = load_grammar(o.grammar);
  Checkpoint ckpt;
  if (!o.policy.empty()) {
    ckpt = load_checkpoint(o.policy, grammar);
  } else {
    ckpt.space = FeatureSpace::from_grammar(grammar);
    ckpt.network = fresh_network(o, ckpt.space, grammar);
  }
  OptimizeConfig cfg;
  cfg.env = env_config(o);
  cfg.ppo.clip = o.clip;
  cfg.ppo.gamma = o.gamma;
  cfg.ppo.lambda = o.lambda;
  cfg.ppo.entropy = o.entropy;
  cfg.ppo.critic_weight = o.critic_weight;
  cfg.ppo.learning_rate = o.lr;
  cfg.ppo.momentum = o.momentum;
  cfg.ppo.epochs = o.epochs;
  cfg.ppo.batch_size = o.batch;
  cfg.ppo.minibatch = o.minibatch;
  cfg.ppo.budget = o.budget;
  cfg.ppo.validate();
  cfg.rounds = o.rounds;
  cfg.top_k = o.top_k;
  cfg.reseed_every = o.reseed_every;
  cfg.reseed_count = o.reseed_count;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  if (cfg.rounds < 0 || cfg.top_k < 0 || cfg.reseed_every < 0 || cfg.reseed_count < 0)
    throw std::invalid_argument("rounds, top-k and re-seeding counts must be non-negative");

  std::ofstream log;
  if (!o.log.empty()) {
    log.open(o.log);
    if (!log)
      throw DataError("cannot write " + o.log);
  }
  auto reward = make_reward(spec, o.budget);
  OptimizeResult r = optimize(grammar, ckpt.space, ckpt.network, *reward, cfg,
                              [&](const RoundLog &l) {
                                const std::string line = l.to_json().dump();
                                err << line << "\n";
                                if (log.is_open())
                                  log << line << "\n" << std::flush;
                              });
  if (!o.checkpoint_out.empty())
    write_file(o.checkpoint_out, dump_artifact(checkpoint_to_json(ckpt)));

  nlohmann::json pool = nlohmann::json::array();
  for (const ScoredMolecule &m: r.pool)
    pool.push_back({ { "smiles", write_smiles(m.molecule) },
                     { "score", m.score },
                     { "sequence", format_sequence(m.sequence) } });
  nlohmann::json result = { { "reward", spec.to_string() },
                            { "rounds", r.history.size() },
                            { "evaluations", reward->evaluations() },
                            { "budget_exhausted", r.budget_exhausted },
                            { "pool", pool } };
  if (!o.out.empty())
    write_file(o.out, dump_artifact(result));
  out << result.dump() << "\n";
  return kExitOk;
}

void add_common(CLI::App *cmd, Options &o) {
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void add_format(CLI::App *cmd, Options &o) {
  cmd->add_option("--format", o.format, "Corpus format")
      ->check(CLI::IsMember({ "smiles", "jsonl" }));
}

void add_env(CLI::App *cmd, Options &o) {
  cmd->add_option("--t-max", o.t_max, "Step limit per episode");
  cmd->add_option("--l-max", o.l_max, "Rule limit per sequence (0: none)");
  cmd->add_option("--r-eps", o.r_eps, "Reward of a non-final step");
  cmd->add_option("--r-incomp", o.r_incomp, "Reward of an unfinished episode");
}

void add_network(CLI::App *cmd, Options &o) {
  cmd->add_option("--width", o.width, "Hidden width d");
  cmd->add_option("--layers", o.layers, "GCN layers L");
  cmd->add_option("--init", o.init, "Uniform init half-width");
}

// Every option of the command as `key = value`, loadable with --config.
std::string echo_config(const CLI::App &cmd) {
  std::string s = "# " + cmd.get_name() + " configuration\n";
  for (const CLI::Option *opt: cmd.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config")
      continue;
    std::string value;
    if (opt->get_type_size() == 0) {
      value = opt->count() > 0 && opt->as<bool>() ? "true" : "false";
    } else if (opt->count() > 0) {
      value = opt->results().back();
    } else {
      value = opt->get_default_str();
    }
    s += name + " = " + value + "\n";
  }
  return s;
}

}  // namespace

int run_cli(std::span<const std::string> raw, std::ostream &out, std::ostream &err) {
  Options o;
  CLI::App app("molnce - molecular graph grammars and policy optimization", "molnce");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  std::string config_path;

  CLI::App *infer = app.add_subcommand("infer", "Infer a grammar from a corpus");
  infer->add_option("--corpus", o.corpus, "Corpus file")->required();
  infer->add_option("--out", o.out, "Grammar output file")->required();
  infer->add_flag("--multi-root", o.multi_root, "Parse from every root");
  infer->add_option("--trees", o.trees, "Write preorder sequences of the parse trees");
  add_format(infer, o);
  add_common(infer, o);

  CLI::App *parse = app.add_subcommand("parse", "Parse molecules under a fixed grammar");
  parse->add_option("--grammar", o.grammar, "Grammar file")->required();
  auto *pc = parse->add_option("--corpus", o.corpus, "Corpus file");
  auto *ps = parse->add_option("--smiles", o.smiles, "One molecule");
  pc->excludes(ps);
  parse->add_option("--root", o.root, "Root atom");
  parse->add_option("--out", o.out, "Sequence output file (default: stdout)");
  add_format(parse, o);
  add_common(parse, o);

  CLI::App *dec = app.add_subcommand("decode", "Decode rule sequences to SMILES");
  dec->add_option("--grammar", o.grammar, "Grammar file")->required();
  dec->add_option("--seq", o.seq, "Sequence file")->required();
  dec->add_option("--out", o.out, "SMILES output file (default: stdout)");
  add_common(dec, o);

  CLI::App *sample = app.add_subcommand("sample", "Sample molecules");
  sample->add_option("--grammar", o.grammar, "Grammar file")->required();
  sample->add_option("-n,--count", o.count, "Number of samples");
  sample->add_option("--policy", o.policy, "Sample from a checkpoint instead of uniformly");
  sample->add_flag("--greedy", o.greedy, "Most probable rule at every step (with --policy)");
  add_env(sample, o);
  add_common(sample, o);

  CLI::App *stats = app.add_subcommand("stats", "Grammar and corpus statistics");
  stats->add_option("--corpus", o.corpus, "Corpus file")->required();
  stats->add_option("--grammar", o.grammar, "Grammar file (default: infer from the corpus)");
  stats->add_option("--held-out", o.held_out, "Held-out corpus for coverage");
  stats->add_flag("--multi-root", o.multi_root, "Parse from every root when inferring");
  add_format(stats, o);
  add_common(stats, o);

  CLI::App *pre = app.add_subcommand("pretrain", "Pretrain the policy on corpus sequences");
  pre->add_option("--grammar", o.grammar, "Grammar file")->required();
  auto *prc = pre->add_option("--corpus", o.corpus, "Corpus file");
  auto *prs = pre->add_option("--seq", o.seq, "Sequence file");
  prc->excludes(prs);
  pre->add_option("--out", o.out, "Checkpoint output file")->required();
  pre->add_option("--policy", o.policy, "Start from this checkpoint");
  pre->add_option("--epochs", o.pretrain_epochs, "Epochs");
  pre->add_option("--lr", o.pretrain_lr, "Learning rate");
  pre->add_option("--momentum", o.momentum, "Momentum");
  pre->add_option("--minibatch", o.pretrain_minibatch, "Steps per gradient step (0: all)");
  add_network(pre, o);
  add_format(pre, o);
  add_common(pre, o);

  CLI::App *opt = app.add_subcommand("optimize", "Optimize molecules with PPO");
  opt->add_option("--grammar", o.grammar, "Grammar file")->required();
  opt->add_option("--reward", o.reward, "Reward specification")->required();
  opt->add_option("--policy", o.policy, "Start from this checkpoint");
  opt->add_option("--rounds", o.rounds, "PPO rounds");
  opt->add_option("--batch", o.batch, "Episodes per round");
  opt->add_option("--epochs", o.epochs, "Passes over each batch");
  opt->add_option("--minibatch", o.minibatch, "Steps per gradient step (0: all)");
  opt->add_option("--lr", o.lr, "Learning rate");
  opt->add_option("--momentum", o.momentum, "Momentum");
  opt->add_option("--clip", o.clip, "Clip epsilon");
  opt->add_option("--gamma", o.gamma, "Discount");
  opt->add_option("--lambda", o.lambda, "GAE lambda");
  opt->add_option("--entropy", o.entropy, "Entropy coefficient");
  opt->add_option("--critic-weight", o.critic_weight, "Critic loss weight");
  opt->add_option("--budget", o.budget, "Unique evaluator queries (0: unlimited)");
  opt->add_option("--top-k", o.top_k, "Pool size");
  opt->add_option("--reseed-every", o.reseed_every, "Rounds between re-seeding (0: never)");
  opt->add_option("--reseed-count", o.reseed_count, "Pool molecules replayed when re-seeding");
  opt->add_option("--out", o.out, "Result file");
  opt->add_option("--checkpoint-out", o.checkpoint_out, "Write the trained checkpoint");
  opt->add_option("--log", o.log, "Training log file (JSON lines)");
  add_env(opt, o);
  add_network(opt, o);
  add_common(opt, o);

  for (CLI::App *cmd: app.get_subcommands({}))
    cmd->add_option("--config", config_path, "key = value configuration file");

  // Config entries go right after the command so that explicit flags win.
  std::vector<std::string> args(raw.begin(), raw.end());
  try {
    for (std::size_t i = 1; i < args.size(); ++i) {
      std::string path;
      std::size_t take = 0;
      if (args[i] == "--config" && i + 1 < args.size()) {
        path = args[i + 1];
        take = 2;
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
        take = 1;
      }
      if (!take)
        continue;
      std::ifstream in(path);
      if (!in)
        throw std::invalid_argument("cannot open config " + path);
      std::vector<std::string> extra;
      for (const auto &[key, value]: parse_config(in)) {
        if (key == "config")
          throw std::invalid_argument("config files cannot include other config files");
        if (!value.empty())
          extra.push_back("--" + key + "=" + value);
      }
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i + take));
      args.insert(args.begin() + 1, extra.begin(), extra.end());
      break;
    }
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  CLI::App *cmd = app.get_subcommands().front();
  err << echo_config(*cmd);
  try {
    if (cmd == infer)
      return cmd_infer(o, out);
    if (cmd == parse) {
      if (o.corpus.empty() && o.smiles.empty())
        throw std::invalid_argument("parse needs --corpus or --smiles");
      return cmd_parse(o, out);
    }
    if (cmd == dec)
      return cmd_decode(o, out);
    if (cmd == sample)
      return cmd_sample(o, out);
    if (cmd == stats)
      return cmd_stats(o, out);
    if (cmd == pre) {
      if (o.corpus.empty() && o.seq.empty())
        throw std::invalid_argument("pretrain needs --corpus or --seq");
      return cmd_pretrain(o, out, err);
    }
    return cmd_optimize(o, out, err);
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const EvaluatorProtocolError &e) {
    err << "evaluator error: " << e.what() << "\n";
    return kExitEvaluator;
  } catch (const BudgetExhausted &e) {
    err << "evaluator error: " << e.what() << "\n";
    return kExitEvaluator;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace molnce
