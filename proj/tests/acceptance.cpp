//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

// Runs the acceptance criteria and prints one PASS/FAIL/SKIPPED line for
// each. Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <unistd.h>

#include "molnce/chem.h"
#include "molnce/corpus.h"
#include "molnce/derivation.h"
#include "molnce/inference.h"
#include "molnce/isomorphism.h"
#include "molnce/policy.h"
#include "molnce/rl.h"
#include "molnce/smiles.h"
#include "support/fd_oracle.h"

using namespace molnce;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

enum class Verdict { kPass, kFail, kSkipped };

struct Check {
  Verdict verdict;
  std::string detail;
};

Check pass_if(bool ok, std::string detail) {
  return { ok ? Verdict::kPass : Verdict::kFail, std::move(detail) };
}

std::string fmt(const char *f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const std::vector<OrderedMolGraph> &corpus() {
  static const auto mols = load_corpus(MOLNCE_CORPUS, CorpusFormat::kSmiles);
  return mols;
}

const InferenceResult &corpus_grammar() {
  static const InferenceResult res = infer_grammar(corpus());
  return res;
}

bool in_mw_range(const Trajectory &t, double lo, double hi) {
  if (!t.molecule)
    return false;
  const double mw = molecular_weight(*t.molecule);
  return mw >= lo && mw <= hi;
}

double in_range_fraction(std::span<const Trajectory> batch, double lo, double hi) {
  int in = 0;
  for (const Trajectory &t: batch)
    in += in_mw_range(t, lo, hi);
  return batch.empty() ? 0.0 : in / static_cast<double>(batch.size());
}

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------- criteria

Check round_trip() {
  const auto start = Clock::now();
  const auto &mols = corpus();
  int max_atoms = 0;
  for (const OrderedMolGraph &m: mols)
    max_atoms = std::max(max_atoms, m.size());
  const InferenceResult &res = corpus_grammar();
  int ok = 0;
  for (std::size_t t = 0; t < res.trees.size(); ++t) {
    try {
      OrderedMolGraph out = decode(res.grammar, preorder(res.trees[t]));
      ok += is_isomorphic(out, mols[res.tree_molecule[t]]);
    } catch (const std::exception &) {
    }
  }
  const double secs = seconds_since(start);
  const int n = static_cast<int>(mols.size());
  return pass_if(n >= 200 && max_atoms <= 40 && ok == n && secs < 60.0,
                 std::to_string(ok) + "/" + std::to_string(n) + " molecules round-trip, "
                     + std::to_string(res.grammar.size()) + " rules, max "
                     + std::to_string(max_atoms) + " heavy atoms, " + fmt("%.2f s", secs));
}

Check validity() {
  const Grammar &g = corpus_grammar().grammar;
  const int n = 1000;
  int complete = 0, dead = 0, limit = 0, valid = 0;
  for (int i = 0; i < n; ++i) {
    SampleResult r = sample_random(g, derive_seed(2024, i), EnvConfig {});
    switch (r.outcome) {
    case molnce::Outcome::kComplete:
      ++complete;
      valid += validate_valence(*r.molecule).valid;
      break;
    case molnce::Outcome::kDeadEnd:
      ++dead;
      break;
    default:
      ++limit;
      break;
    }
  }
  return pass_if(complete > 0 && valid == complete,
                 std::to_string(valid) + "/" + std::to_string(complete)
                     + " completed samples valid; completion " + fmt("%.1f%%", 100.0 * complete / n)
                     + ", dead end " + fmt("%.1f%%", 100.0 * dead / n) + ", step limit "
                     + fmt("%.1f%%", 100.0 * limit / n));
}

Check legality() {
  long steps = 0, legal = 0;
  auto replay = [&](const InferenceResult &res) {
    for (const ParseTree &tree: res.trees) {
      DerivationState state;
      for (RuleId id: preorder(tree)) {
        ++steps;
        const auto rules = legal_rules(res.grammar, state);
        if (!std::binary_search(rules.begin(), rules.end(), id))
          break;
        ++legal;
        apply_rule_in_place(res.grammar, state, id);
      }
    }
  };
  replay(corpus_grammar());
  replay(infer_grammar(corpus(), true));
  return pass_if(steps > 0 && legal == steps,
                 std::to_string(legal) + "/" + std::to_string(steps)
                     + " steps legal (single-root and multi-root trees)");
}

Check gradients() {
  const testing::FdReport r = testing::finite_difference_check(20, 2024, 1e-4);
  const double worst = std::max({ r.worst_log_prob, r.worst_entropy, r.worst_value });
  return pass_if(r.instances == 20 && worst <= 1e-4,
                 std::to_string(r.instances) + " instances, " + std::to_string(r.entries)
                     + " entries; max relative error log-prob " + fmt("%.2e", r.worst_log_prob)
                     + ", entropy " + fmt("%.2e", r.worst_entropy) + ", value "
                     + fmt("%.2e", r.worst_value) + "; " + std::to_string(r.rejected)
                     + " draws redrawn at ReLU kinks");
}

Check gae() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0), coef(0.05, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Trajectory t;
    const int length = 1 + static_cast<int>(rng() % 10);
    for (int k = 0; k < length; ++k) {
      TrajectoryStep s;
      s.reward = u(rng);
      s.value = u(rng);
      t.steps.push_back(std::move(s));
    }
    const double gamma = coef(rng), lambda = coef(rng);
    const Advantages a = compute_gae(t, gamma, lambda);
    for (int k = 0; k < length; ++k) {
      double expect = 0.0;
      for (int j = k; j < length; ++j) {
        const double next = j + 1 < length ? t.steps[j + 1].value : 0.0;
        expect += std::pow(gamma * lambda, j - k)
                  * (t.steps[j].reward + gamma * next - t.steps[j].value);
      }
      worst = std::max(worst, std::abs(a.advantages[k] - expect));
      worst = std::max(worst, std::abs(a.returns[k] - (expect + t.steps[k].value)));
    }
  }
  return pass_if(worst <= 1e-10, "100 trajectories, max abs difference " + fmt("%.2e", worst));
}

// Settings of the range-targeting run.
struct RangeRun {
  int width = 32;
  int layers = 3;
  double init = 0.1;
  int pretrain_epochs = 5;
  double pretrain_lr = 1e-2;
  int rounds = 40;
  double lr = 0.1;
  int epochs = 4;
  int batch = 64;
  int baseline_samples = 256;
};

Check rl_improvement() {
  const RangeRun cfg;
  const double lo = 150.0, hi = 200.0;
  const auto start = Clock::now();
  const InferenceResult &res = corpus_grammar();
  const FeatureSpace space = FeatureSpace::from_grammar(res.grammar);
  PolicyNetwork net(NetworkShape { space.node_dim(), space.edge_channels(), res.grammar.size(),
                                   cfg.layers, cfg.width });
  net.init_uniform(cfg.init, 1);
  std::vector<RuleSequence> seqs;
  for (const ParseTree &t: res.trees)
    seqs.push_back(preorder(t));
  PretrainConfig pc;
  pc.epochs = cfg.pretrain_epochs;
  pc.learning_rate = cfg.pretrain_lr;
  pretrain(net, space, res.grammar, seqs, pc);

  EnvConfig env;
  env.l_max = res.stats.max_rules_per_molecule;
  std::vector<Trajectory> baseline;
  for (int i = 0; i < cfg.baseline_samples; ++i)
    baseline.push_back(rollout(res.grammar, space, net, env, derive_seed(99, i)));
  const double before = in_range_fraction(baseline, lo, hi);

  auto reward = make_reward(RewardSpec::parse("mw_range(150,200)"));
  OptimizeConfig oc;
  oc.env = env;
  oc.rounds = cfg.rounds;
  oc.seed = 5;
  oc.ppo.learning_rate = cfg.lr;
  oc.ppo.epochs = cfg.epochs;
  oc.ppo.batch_size = cfg.batch;
  OptimizeResult out = optimize(res.grammar, space, net, *reward, oc);
  const double after = in_range_fraction(out.last_batch, lo, hi);
  const double secs = seconds_since(start);
  const bool ok = static_cast<int>(out.history.size()) <= 200 && secs < 1800.0
                  && after - before >= 0.30 && after >= 0.80;
  return pass_if(ok, "in range " + fmt("%.1f%%", 100 * before) + " after pretraining -> "
                         + fmt("%.1f%%", 100 * after) + " in the final batch of "
                         + std::to_string(out.last_batch.size()) + " after "
                         + std::to_string(out.history.size()) + " rounds, " + fmt("%.0f s", secs));
}

Check budget(const fs::path &work) {
  const fs::path log = work / "evaluator.log";
  fs::remove(log);
  const InferenceResult &res = corpus_grammar();
  const FeatureSpace space = FeatureSpace::from_grammar(res.grammar);
  PolicyNetwork net(NetworkShape { space.node_dim(), space.edge_channels(), res.grammar.size(), 2, 24 });
  net.init_uniform(0.1, 3);
  RewardSpec spec;
  spec.kind = RewardKind::kExternal;
  spec.command = std::string(MOLNCE_TOY_EVALUATOR) + " --log " + log.string();
  OptimizeResult out;
  int used = 0;
  {
    auto reward = make_reward(spec, 500);
    OptimizeConfig oc;
    oc.env.l_max = res.stats.max_rules_per_molecule;
    oc.rounds = 200;
    oc.seed = 11;
    oc.ppo.budget = 500;
    out = optimize(res.grammar, space, net, *reward, oc);
    used = reward->evaluations();
  }  // the evaluator exits and flushes its log here
  std::ifstream in(log);
  std::set<std::string> unique;
  long received = 0;
  for (std::string line; std::getline(in, line); ++received)
    unique.insert(line);
  return pass_if(unique.size() <= 500 && received <= 500 && used <= 500,
                 std::to_string(unique.size()) + " unique queries (" + std::to_string(received)
                     + " received) over " + std::to_string(out.history.size())
                     + " rounds; budget " + (out.budget_exhausted ? "exhausted" : "not reached"));
}

Check parse_complexity() {
  std::vector<double> xs, ys;
  for (int n = 10; n <= 200; n += 10) {
    const OrderedMolGraph chain = parse_smiles(std::string(n, 'C'));
    const int reps = std::max(3, 2000 / n);
    double best = 1e300;
    for (int trial = 0; trial < 5; ++trial) {
      const auto start = Clock::now();
      for (int r = 0; r < reps; ++r) {
        GrammarBuilder builder;
        parse_molecule(chain, builder);
      }
      best = std::min(best, seconds_since(start) / reps);
    }
    xs.push_back(std::log(n));
    ys.push_back(std::log(best));
  }
  const double k = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return pass_if(slope <= 2.3, "log-log slope " + fmt("%.3f", slope) + " over n = 10..200 ("
                                   + fmt("%.2f ms", 1e3 * std::exp(ys.back())) + " at n = 200)");
}

Check determinism(const fs::path &work) {
  const std::string cli = MOLNCE_CLI;
  const std::string corpus_path = MOLNCE_CORPUS;
  std::vector<std::string> reference;
  std::vector<std::string> names = { "infer.json", "grammar.json", "sample.jsonl", "stats.json" };
  std::string mismatch;
  int runs = 0;
  for (int threads: { 1, 1, 4, 4 }) {
    const fs::path dir = work / ("run" + std::to_string(runs++));
    fs::create_directories(dir);
    const std::string t = " --threads " + std::to_string(threads);
    const std::string g = (dir / "grammar.json").string();
    const std::vector<std::string> commands = {
      cli + " infer --corpus " + corpus_path + " --out " + g + t + " > " + (dir / "infer.json").string(),
      cli + " sample --grammar " + g + " -n 500 --seed 17" + t + " > " + (dir / "sample.jsonl").string(),
      cli + " stats --grammar " + g + " --corpus " + corpus_path + " --held-out " + corpus_path + t
          + " > " + (dir / "stats.json").string(),
    };
    for (const std::string &c: commands)
      if (std::system((c + " 2>/dev/null").c_str()) != 0)
        return { Verdict::kFail, "command failed: " + c };
    std::vector<std::string> contents;
    for (const std::string &name: names)
      contents.push_back(read_file(dir / name));
    if (reference.empty()) {
      reference = contents;
      continue;
    }
    for (std::size_t i = 0; i < names.size(); ++i)
      if (contents[i] != reference[i] && mismatch.empty())
        mismatch = names[i] + " differs with " + std::to_string(threads) + " threads";
  }
  bool nonempty = true;
  for (const std::string &s: reference)
    nonempty = nonempty && !s.empty();
  return pass_if(mismatch.empty() && nonempty,
                 mismatch.empty() ? "infer, sample and stats outputs byte-identical over 2 runs x threads {1, 4}"
                                  : mismatch);
}

Check zinc_scale() {
  const char *train = std::getenv("MOLNCE_ZINC_TRAIN");
  const char *test = std::getenv("MOLNCE_ZINC_TEST");
  if (!train || !test)
    return { Verdict::kSkipped, "set MOLNCE_ZINC_TRAIN and MOLNCE_ZINC_TEST to Kekule SMILES files of the split" };
  const auto start = Clock::now();
  const auto train_mols = load_corpus(train, CorpusFormat::kSmiles);
  const auto test_mols = load_corpus(test, CorpusFormat::kSmiles);
  const int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const InferenceResult res = infer_grammar(train_mols, false, threads);
  const Coverage c = coverage(res.grammar, test_mols);
  const double covered = c.covered / static_cast<double>(std::max<std::size_t>(1, test_mols.size()));
  const int rules = res.grammar.size();
  return pass_if(rules >= 1775 / 2 && rules <= 2 * 1775 && covered >= 0.999,
                 std::to_string(rules) + " rules from " + std::to_string(train_mols.size())
                     + " molecules, coverage " + std::to_string(c.covered) + "/"
                     + std::to_string(test_mols.size()) + ", " + fmt("%.0f s", seconds_since(start)));
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app { "Acceptance checks" };
  std::vector<int> only;
  app.add_option("criteria", only, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const fs::path work = fs::temp_directory_path() / ("molnce-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
    { "round-trip", round_trip },
    { "validity", validity },
    { "legality", legality },
    { "gradients", gradients },
    { "gae", gae },
    { "rl-improvement", rl_improvement },
    { "budget", [&] { return budget(work); } },
    { "parse-complexity", parse_complexity },
    { "determinism", [&] { return determinism(work); } },
    { "zinc250k", zinc_scale },
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
      continue;
    Check o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = { Verdict::kFail, std::string("exception: ") + e.what() };
    }
    const char *tag = o.verdict == Verdict::kPass ? "PASS" : o.verdict == Verdict::kFail ? "FAIL" : "SKIPPED";
    failed += o.verdict == Verdict::kFail;
    std::cout << "[" << tag << "] " << id << " " << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::error_code ec;
  fs::remove_all(work, ec);
  return failed == 0 ? 0 : 1;
}
