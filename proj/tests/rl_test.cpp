//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "molnce/chem.h"
#include "molnce/error.h"
#include "molnce/fingerprint.h"
#include "molnce/inference.h"
#include "molnce/isomorphism.h"
#include "molnce/rl.h"
#include "molnce/smiles.h"

using namespace molnce;

namespace {

struct Fixture {
  InferenceResult inferred;
  FeatureSpace space;
  PolicyNetwork net;
  std::vector<RuleSequence> sequences;
};

Fixture make_fixture(std::initializer_list<const char *> smiles, int width = 8,
                     int layers = 2, std::uint64_t seed = 1, double init = 0.1) {
  std::vector<OrderedMolGraph> corpus;
  for (const char *s: smiles)
    corpus.push_back(parse_smiles(s));
  Fixture fx;
  fx.inferred = infer_grammar(corpus);
  fx.space = FeatureSpace::from_grammar(fx.inferred.grammar);
  fx.net = PolicyNetwork(NetworkShape{ fx.space.node_dim(), fx.space.edge_channels(),
                                       fx.inferred.grammar.size(), layers,
                                       std::max(width, fx.space.node_dim()) });
  fx.net.init_uniform(init, seed);
  for (const ParseTree &t: fx.inferred.trees)
    fx.sequences.push_back(preorder(t));
  return fx;
}

const std::initializer_list<const char *> kSmall = {
  "CCO", "CC(=O)O", "C1=CC=CC=C1O", "CCN(C)C", "OC1CCCC1", "CC#N", "C=CC=O",
};

Trajectory random_trajectory(std::mt19937_64 &rng, int length) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Trajectory t;
  for (int k = 0; k < length; ++k) {
    TrajectoryStep s;
    s.reward = u(rng);
    s.value = u(rng);
    t.steps.push_back(std::move(s));
  }
  return t;
}

std::string toy_evaluator(const std::string &log = {}) {
  std::string cmd = MOLNCE_TOY_EVALUATOR;
  if (!log.empty())
    cmd += " --log " + log;
  return cmd;
}

int count_lines(const std::string &path) {
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line))
    ++n;
  return n;
}

}  // namespace

// ----------------------------------------------------------------- rewards

TEST(Reward, MethaneMolecularWeight) {
  // 12.011 + 4 * 1.008
  EXPECT_NEAR(molecular_weight(parse_smiles("C")), 16.043, 0.01);
}

TEST(Reward, MwRangeCenterAndEdge) {
  OrderedMolGraph m = parse_smiles("CCO");
  const double mw = molecular_weight(m);
  EXPECT_DOUBLE_EQ(mw_range_reward(m, mw - 25, mw + 25), 1.0);
  EXPECT_DOUBLE_EQ(mw_range_reward(m, mw, mw + 50), 0.5);
  EXPECT_DOUBLE_EQ(mw_range_reward(m, mw - 50, mw), 0.5);
  EXPECT_NEAR(mw_range_reward(m, mw + 25, mw + 75), 1.0 / 3.0, 1e-12);
}

TEST(Reward, SimilarityConstraint) {
  OrderedMolGraph target = parse_smiles("CC(=O)OC1=CC=CC=C1C(=O)O");
  Fingerprint fp = circular_fingerprint(target);
  auto inner = [](const OrderedMolGraph &) { return 3.5; };
  EXPECT_EQ(similarity_constrained_reward(target, fp, 0.6, inner), 3.5);
  EXPECT_EQ(similarity_constrained_reward(parse_smiles("N#N"), fp, 0.6, inner), -1.0);
  EXPECT_EQ(similarity_constrained_reward(parse_smiles("N#N"), fp, 0.0, inner), 3.5);
}

TEST(Reward, SpecParseAndPrint) {
  RewardSpec a = RewardSpec::parse("mw_range(150, 200)");
  EXPECT_EQ(a.kind, RewardKind::kMwRange);
  EXPECT_EQ(a.lo, 150.0);
  EXPECT_EQ(a.hi, 200.0);
  EXPECT_EQ(a.to_string(), "mw_range(150,200)");
  RewardSpec b = RewardSpec::parse("similarity(CC(=O)O,0.4,mw_range(100,300))");
  EXPECT_EQ(b.target, "CC(=O)O");
  EXPECT_EQ(b.delta, 0.4);
  ASSERT_TRUE(b.inner);
  EXPECT_EQ(b.inner->kind, RewardKind::kMwRange);
  EXPECT_EQ(RewardSpec::parse(b.to_string()).to_string(), b.to_string());
  RewardSpec c = RewardSpec::parse("external(python3 -c 'print(1)', x)");
  EXPECT_EQ(c.command, "python3 -c 'print(1)', x");
  EXPECT_EQ(RewardSpec::parse("ring_count").kind, RewardKind::kRingCount);
  EXPECT_EQ(RewardSpec::parse("constant(2.5)").constant, 2.5);
  RewardSpec d = RewardSpec::from_json(b.to_json());
  EXPECT_EQ(d.to_string(), b.to_string());
}

TEST(Reward, SpecValidation) {
  EXPECT_THROW(RewardSpec::parse("mw_range(200,150)"), std::invalid_argument);
  EXPECT_THROW(RewardSpec::parse("mw_range(1)"), std::invalid_argument);
  EXPECT_THROW(RewardSpec::parse("similarity(C,1.5,ring_count)"), std::invalid_argument);
  EXPECT_THROW(RewardSpec::parse("logp"), std::invalid_argument);
  EXPECT_THROW(RewardSpec::parse("constant(abc)"), std::invalid_argument);
}

TEST(Reward, ScaleAndOffset) {
  RewardSpec spec = RewardSpec::parse("ring_count");
  spec.scale = 2.0;
  spec.offset = -1.0;
  auto r = make_reward(spec);
  EXPECT_EQ(r->score(parse_smiles("C1CC2CCC1C2")), 3.0);
  EXPECT_EQ(r->score(parse_smiles("CC")), -1.0);
}

TEST(External, EchoEvaluator) {
  ExternalEvaluator ev("while read l; do echo 1.0; done", 0);
  EXPECT_EQ(ev.evaluate(parse_smiles("CCO")), 1.0);
  EXPECT_EQ(ev.used(), 1);
}

TEST(External, CacheCountsUniqueMoleculesUpToIsomorphism) {
  const std::string log = ::testing::TempDir() + "molnce_cache_log.txt";
  std::remove(log.c_str());
  {
    ExternalEvaluator ev(toy_evaluator(log), 0);
    EXPECT_EQ(ev.evaluate(parse_smiles("CCO")), 0.3);
    EXPECT_EQ(ev.evaluate(parse_smiles("OCC")), 0.3);
    EXPECT_EQ(ev.evaluate(parse_smiles("CCO")), 0.3);
    EXPECT_EQ(ev.used(), 1);
    EXPECT_EQ(ev.evaluate(parse_smiles("CCCO")), 0.4);
    EXPECT_EQ(ev.used(), 2);
  }
  EXPECT_EQ(count_lines(log), 2);
}

TEST(External, BudgetExhaustedOnFirstQueryPastTheCap) {
  ExternalEvaluator ev(toy_evaluator(), 3);
  const char *mols[] = { "C", "CC", "CCC" };
  for (const char *m: mols)
    ev.evaluate(parse_smiles(m));
  EXPECT_EQ(ev.used(), 3);
  EXPECT_EQ(ev.evaluate(parse_smiles("CC")), 0.2);  // cached, free
  EXPECT_THROW(ev.evaluate(parse_smiles("CCCC")), BudgetExhausted);
  EXPECT_EQ(ev.used(), 3);
}

TEST(External, ProtocolErrors) {
  {
    ExternalEvaluator ev("while read l; do echo nope; done", 0);
    EXPECT_THROW(ev.evaluate(parse_smiles("C")), EvaluatorProtocolError);
  }
  {
    ExternalEvaluator ev("read l; exit 0", 0);
    EXPECT_THROW(ev.evaluate(parse_smiles("C")), EvaluatorProtocolError);
  }
  {
    ExternalEvaluator ev("exit 0", 0);
    EXPECT_THROW(ev.evaluate(parse_smiles("C")), EvaluatorProtocolError);
  }
}

// ---------------------------------------------------------- environment

TEST(Env, MidEpisodeStepGivesSmallReward) {
  Fixture fx = make_fixture({ "CCO" });
  const Grammar &g = fx.inferred.grammar;
  EnvConfig cfg;
  cfg.r_eps = 0.01;
  auto reward = make_reward(RewardSpec::parse("constant(5)"));
  DerivationState state;
  RuleSequence seq = fx.sequences[0];
  ASSERT_GT(seq.size(), 1u);
  StepResult r = env_step(g, state, seq[0], cfg, *reward);
  EXPECT_FALSE(r.done);
  EXPECT_EQ(r.reward, 0.01);
}

TEST(Env, StepLimitGivesIncompleteReward) {
  Fixture fx = make_fixture({ "CCO" });
  EnvConfig cfg;
  cfg.t_max = 1;
  cfg.r_incomp = -0.5;
  auto reward = make_reward(RewardSpec::parse("constant(5)"));
  DerivationState state;
  StepResult r = env_step(fx.inferred.grammar, state, fx.sequences[0][0], cfg, *reward);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.outcome, Outcome::kLimit);
  EXPECT_EQ(r.reward, -0.5);
}

TEST(Env, CompletionAtRangeCenterGivesFullReward) {
  Fixture fx = make_fixture({ "CC(=O)O" });
  const double mw = molecular_weight(parse_smiles("CC(=O)O"));
  RewardSpec spec;
  spec.kind = RewardKind::kMwRange;
  spec.lo = mw - 25;
  spec.hi = mw + 25;
  auto reward = make_reward(spec);
  DerivationState state;
  StepResult r;
  for (RuleId id: fx.sequences[0])
    r = env_step(fx.inferred.grammar, state, id, EnvConfig(), *reward);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.outcome, Outcome::kComplete);
  EXPECT_DOUBLE_EQ(r.reward, 1.0);
}

TEST(Env, IllegalActionIsRejected) {
  Fixture fx = make_fixture(kSmall);
  auto reward = make_reward(RewardSpec::parse("constant(1)"));
  DerivationState state;
  std::vector<RuleId> legal = legal_rules(fx.inferred.grammar, state);
  RuleId bad = 0;
  while (std::find(legal.begin(), legal.end(), bad) != legal.end())
    ++bad;
  EXPECT_THROW(env_step(fx.inferred.grammar, state, bad, EnvConfig(), *reward), IllegalRule);
}

TEST(Env, TrajectoryRewardBookkeeping) {
  Fixture fx = make_fixture(kSmall);
  EnvConfig cfg;
  cfg.t_max = 12;
  cfg.r_eps = 0.001;
  cfg.r_incomp = -0.75;
  auto reward = make_reward(RewardSpec::parse("ring_count"));
  std::vector<Trajectory> batch;
  for (int e = 0; e < 60; ++e)
    batch.push_back(rollout(fx.inferred.grammar, fx.space, fx.net, cfg, 100 + e));
  ASSERT_TRUE(assign_rewards(batch, *reward, cfg));
  int complete = 0, limit = 0;
  for (const Trajectory &t: batch) {
    ASSERT_FALSE(t.steps.empty());
    for (std::size_t k = 0; k + 1 < t.steps.size(); ++k)
      EXPECT_EQ(t.steps[k].reward, 0.001);
    if (t.outcome == Outcome::kComplete) {
      ++complete;
      ASSERT_TRUE(t.molecule && t.score);
      EXPECT_EQ(t.steps.back().reward, ring_count(*t.molecule));
      EXPECT_EQ(decode(fx.inferred.grammar, t.sequence()), *t.molecule);
    } else {
      ++limit;
      EXPECT_EQ(t.outcome, Outcome::kLimit);
      EXPECT_EQ(t.steps.back().reward, -0.75);
      EXPECT_EQ(static_cast<int>(t.steps.size()), cfg.t_max);
    }
    for (const TrajectoryStep &s: t.steps) {
      EXPECT_NE(std::find(s.legal.begin(), s.legal.end(), s.action), s.legal.end());
      EXPECT_LE(s.log_prob, 0.0);
    }
  }
  EXPECT_GT(complete, 0);
}

TEST(Env, RolloutIsReproducible) {
  Fixture fx = make_fixture(kSmall);
  for (int e = 0; e < 10; ++e) {
    Trajectory a = rollout(fx.inferred.grammar, fx.space, fx.net, EnvConfig(), e);
    Trajectory b = rollout(fx.inferred.grammar, fx.space, fx.net, EnvConfig(), e);
    EXPECT_EQ(a.sequence(), b.sequence());
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
      EXPECT_EQ(a.steps[k].log_prob, b.steps[k].log_prob);
      EXPECT_EQ(a.steps[k].value, b.steps[k].value);
    }
  }
}

TEST(Env, BudgetExhaustionScoresIncomplete) {
  Fixture fx = make_fixture(kSmall);
  RewardSpec spec;
  spec.kind = RewardKind::kExternal;
  spec.command = toy_evaluator();
  auto reward = make_reward(spec, 2);
  EnvConfig cfg;
  std::vector<Trajectory> batch;
  for (int e = 0; e < 40; ++e)
    batch.push_back(rollout(fx.inferred.grammar, fx.space, fx.net, cfg, e));
  EXPECT_FALSE(assign_rewards(batch, *reward, cfg));
  EXPECT_EQ(reward->evaluations(), 2);
  int incomplete = 0;
  for (const Trajectory &t: batch)
    if (t.outcome == Outcome::kIncomplete) {
      ++incomplete;
      EXPECT_EQ(t.steps.back().reward, cfg.r_incomp);
      EXPECT_FALSE(t.score);
    }
  EXPECT_GT(incomplete, 0);
}

// ------------------------------------------------------------------ GAE

TEST(Gae, LambdaZeroGivesTemporalDifference) {
  std::mt19937_64 rng(1);
  Trajectory t = random_trajectory(rng, 6);
  Advantages a = compute_gae(t, 0.9, 0.0);
  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    const double next = k + 1 < t.steps.size() ? t.steps[k + 1].value : 0.0;
    EXPECT_DOUBLE_EQ(a.advantages[k], t.steps[k].reward + 0.9 * next - t.steps[k].value);
  }
}

TEST(Gae, UndiscountedZeroCriticGivesRewardToGo) {
  std::mt19937_64 rng(2);
  Trajectory t = random_trajectory(rng, 7);
  for (TrajectoryStep &s: t.steps)
    s.value = 0.0;
  Advantages a = compute_gae(t, 1.0, 1.0);
  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    double togo = 0.0;
    for (std::size_t j = k; j < t.steps.size(); ++j)
      togo += t.steps[j].reward;
    EXPECT_NEAR(a.advantages[k], togo, 1e-14);
    EXPECT_NEAR(a.returns[k], togo, 1e-14);
  }
}

TEST(Gae, MatchesDoubleSummation) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Trajectory t = random_trajectory(rng, 1 + static_cast<int>(rng() % 10));
    const double gamma = u(rng), lambda = u(rng);
    Advantages a = compute_gae(t, gamma, lambda);
    const std::size_t n = t.steps.size();
    for (std::size_t k = 0; k < n; ++k) {
      double expect = 0.0;
      for (std::size_t j = k; j < n; ++j) {
        const double next = j + 1 < n ? t.steps[j + 1].value : 0.0;
        const double delta = t.steps[j].reward + gamma * next - t.steps[j].value;
        expect += std::pow(gamma * lambda, static_cast<double>(j - k)) * delta;
      }
      EXPECT_NEAR(a.advantages[k], expect, 1e-10);
    }
  }
}

TEST(Gae, BatchNormalization) {
  std::mt19937_64 rng(4);
  std::vector<Trajectory> batch;
  for (int k = 0; k < 5; ++k)
    batch.push_back(random_trajectory(rng, 3 + k));
  Advantages a = batch_advantages(batch, 0.99, 0.95);
  ASSERT_EQ(a.advantages.size(), 3u + 4 + 5 + 6 + 7);
  double mean = 0.0, sq = 0.0;
  for (double x: a.advantages)
    mean += x;
  mean /= a.advantages.size();
  for (double x: a.advantages)
    sq += (x - mean) * (x - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(sq / a.advantages.size(), 1.0, 1e-6);
  std::size_t at = 0;
  for (const Trajectory &t: batch) {
    Advantages raw = compute_gae(t, 0.99, 0.95);
    for (std::size_t k = 0; k < raw.returns.size(); ++k)
      EXPECT_EQ(a.returns[at + k], raw.returns[k]);
    at += raw.returns.size();
  }
}

// ------------------------------------------------------------------ PPO

TEST(Ppo, ClippedSurrogate) {
  EXPECT_EQ(clipped_surrogate(1.0, 2.0, 0.2), 2.0);
  EXPECT_EQ(clipped_surrogate(1.5, 2.0, 0.2), 1.2 * 2.0);
  EXPECT_EQ(clipped_surrogate(0.5, 2.0, 0.2), 0.5 * 2.0);
  EXPECT_EQ(clipped_surrogate(0.5, -2.0, 0.2), 0.8 * -2.0);
  EXPECT_EQ(clipped_surrogate(1.5, -2.0, 0.2), 1.5 * -2.0);
  for (double r: { 0.3, 1.0, 1.7 }) {
    EXPECT_EQ(clipped_surrogate(r, 1.0, 0.0), std::min(r, 1.0));
    EXPECT_EQ(clipped_surrogate(r, -1.0, 0.0), std::min(-r, -1.0));
  }
  EXPECT_EQ(clipped_surrogate(1.0, 3.0, 0.0), 3.0);
}

TEST(Ppo, ConfigValidation) {
  PPOConfig c;
  EXPECT_NO_THROW(c.validate());
  c.clip = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = PPOConfig();
  c.gamma = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = PPOConfig();
  c.lambda = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Ppo, RatiosAreOneAtOldParameters) {
  Fixture fx = make_fixture(kSmall);
  std::vector<Trajectory> batch;
  for (int e = 0; e < 16; ++e)
    batch.push_back(rollout(fx.inferred.grammar, fx.space, fx.net, EnvConfig(), e));
  auto reward = make_reward(RewardSpec::parse("ring_count"));
  assign_rewards(batch, *reward, EnvConfig());
  PPOConfig cfg;
  cfg.epochs = 1;
  cfg.minibatch = 0;
  Optimizer opt(cfg.learning_rate, cfg.momentum);
  PPOMetrics m = ppo_update(fx.net, opt, fx.space, batch, cfg, 1);
  EXPECT_EQ(m.mean_ratio, 1.0);
  EXPECT_EQ(m.clip_fraction, 0.0);
  // At ratio 1 the surrogate is the normalized advantage, whose mean is 0.
  EXPECT_NEAR(m.surrogate, 0.0, 1e-12);
}

TEST(Ppo, ForcedSingleStepEpisodeLeavesPolicyUnchanged) {
  Fixture fx = make_fixture({ "C" });
  ASSERT_EQ(fx.inferred.grammar.size(), 1);
  Trajectory t = rollout(fx.inferred.grammar, fx.space, fx.net, EnvConfig(), 0);
  ASSERT_EQ(t.steps.size(), 1u);
  EXPECT_EQ(t.steps[0].log_prob, 0.0);
  auto reward = make_reward(RewardSpec::parse("constant(1)"));
  std::vector<Trajectory> batch { t, t };
  assign_rewards(batch, *reward, EnvConfig());
  PPOConfig cfg;
  cfg.critic_weight = 0.0;
  const std::vector<double> before = fx.net.params();
  Optimizer opt(cfg.learning_rate, cfg.momentum);
  ppo_update(fx.net, opt, fx.space, batch, cfg, 1);
  EXPECT_EQ(fx.net.params(), before);
}

TEST(Ppo, AdaptiveWeightsMatchFixedWeights) {
  Fixture fx = make_fixture(kSmall);
  Trajectory t = rollout(fx.inferred.grammar, fx.space, fx.net, EnvConfig(), 3);
  for (const TrajectoryStep &s: t.steps) {
    Featurization f = featurize(fx.space, s.state);
    std::vector<double> a(fx.net.size(), 0.0), b(fx.net.size(), 0.0);
    LossWeights w { 0.7, -0.2, 0.4 };
    StepEvaluation ea = fx.net.backward(f, s.legal, s.action, w, a);
    StepEvaluation eb = fx.net.adaptive_backward(
        f, s.legal, s.action, [&](const StepEvaluation &) { return w; }, b);
    EXPECT_EQ(a, b);
    EXPECT_EQ(ea.log_prob, eb.log_prob);
    EXPECT_EQ(ea.log_prob, s.log_prob);
    EXPECT_EQ(eb.value, s.value);
  }
}

TEST(Ppo, UpdateIsIndependentOfThreadCount) {
  Fixture fx = make_fixture(kSmall);
  std::vector<Trajectory> batch;
  for (int e = 0; e < 12; ++e)
    batch.push_back(rollout(fx.inferred.grammar, fx.space, fx.net, EnvConfig(), e));
  auto reward = make_reward(RewardSpec::parse("ring_count"));
  assign_rewards(batch, *reward, EnvConfig());
  PPOConfig cfg;
  cfg.minibatch = 32;
  PolicyNetwork a = fx.net, b = fx.net;
  Optimizer oa(cfg.learning_rate, cfg.momentum), ob(cfg.learning_rate, cfg.momentum);
  PPOMetrics ma = ppo_update(a, oa, fx.space, batch, cfg, 9, 1);
  PPOMetrics mb = ppo_update(b, ob, fx.space, batch, cfg, 9, 4);
  EXPECT_EQ(a.params(), b.params());
  EXPECT_EQ(ma.entropy, mb.entropy);
  EXPECT_NE(a.params(), fx.net.params());
}

TEST(Ppo, ImprovesAdvantagedActions) {
  // Reward ring count; after several updates on the same batch the ratio of
  // positively advantaged steps rises above one.
  Fixture fx = make_fixture(kSmall);
  std::vector<Trajectory> batch;
  for (int e = 0; e < 32; ++e)
    batch.push_back(rollout(fx.inferred.grammar, fx.space, fx.net, EnvConfig(), e));
  auto reward = make_reward(RewardSpec::parse("ring_count"));
  assign_rewards(batch, *reward, EnvConfig());
  PPOConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 8;
  cfg.entropy = 0.0;
  Optimizer opt(cfg.learning_rate, cfg.momentum);
  PolicyNetwork before = fx.net;
  ppo_update(fx.net, opt, fx.space, batch, cfg, 2);
  Advantages adv = batch_advantages(batch, cfg.gamma, cfg.lambda);
  double gain = 0.0;
  std::size_t at = 0;
  for (const Trajectory &t: batch)
    for (const TrajectoryStep &s: t.steps) {
      Featurization f = featurize(fx.space, s.state);
      Eigen::VectorXd lp = masked_log_softmax(fx.net.logits(f), s.legal);
      const auto k = std::find(s.legal.begin(), s.legal.end(), s.action) - s.legal.begin();
      gain += adv.advantages[at++] * (lp[k] - s.log_prob);
    }
  EXPECT_GT(gain, 0.0);
}

// ------------------------------------------------------------ pretraining

TEST(Pretrain, SingleAtomCorpusHasZeroNll) {
  Fixture fx = make_fixture({ "C" });
  PretrainConfig cfg;
  cfg.epochs = 2;
  PretrainReport r = pretrain(fx.net, fx.space, fx.inferred.grammar, fx.sequences, cfg);
  EXPECT_EQ(r.initial_nll, 0.0);
  ASSERT_EQ(r.epoch_nll.size(), 2u);
  EXPECT_EQ(r.epoch_nll.back(), 0.0);
}

TEST(Pretrain, ZeroEpochsLeaveParametersUnchanged) {
  Fixture fx = make_fixture(kSmall);
  const std::vector<double> before = fx.net.params();
  PretrainConfig cfg;
  cfg.epochs = 0;
  PretrainReport r = pretrain(fx.net, fx.space, fx.inferred.grammar, fx.sequences, cfg);
  EXPECT_TRUE(r.epoch_nll.empty());
  EXPECT_EQ(fx.net.params(), before);
}

TEST(Pretrain, NllDecreases) {
  Fixture fx = make_fixture(kSmall, 16);
  PretrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 0.05;
  cfg.minibatch = 16;
  PretrainReport r = pretrain(fx.net, fx.space, fx.inferred.grammar, fx.sequences, cfg);
  EXPECT_LT(r.epoch_nll.front(), r.initial_nll);
  EXPECT_LT(r.epoch_nll.back(), r.epoch_nll.front());
  EXPECT_NEAR(sequence_nll(fx.net, fx.space, fx.inferred.grammar, fx.sequences),
              r.epoch_nll.back(), 1e-12);
}

TEST(Pretrain, InconsistentSequenceIsRejected) {
  Fixture fx = make_fixture(kSmall);
  std::vector<RuleSequence> bad { fx.sequences[0] };
  bad[0].push_back(bad[0][0]);
  PretrainConfig cfg;
  EXPECT_THROW(pretrain(fx.net, fx.space, fx.inferred.grammar, bad, cfg), IllegalSequence);
  std::vector<RuleSequence> wrong { { fx.sequences[0].back() } };
  if (fx.inferred.grammar.rule(wrong[0][0]).kind != RuleKind::kStart)
    EXPECT_THROW(pretrain(fx.net, fx.space, fx.inferred.grammar, wrong, cfg), IllegalSequence);
}

TEST(Pretrain, GreedyDecodingReproducesAMemorisedMolecule) {
  // With one training molecule the likelihood optimum puts the most mass on
  // its own rule at every state, so greedy decoding rebuilds it.
  const char *smiles = "NCC(=O)O";
  Fixture fx = make_fixture({ smiles }, 16, 2, 1, 0.5);
  PretrainConfig cfg;
  cfg.epochs = 100;
  cfg.learning_rate = 0.05;
  cfg.minibatch = 0;
  PretrainReport r = pretrain(fx.net, fx.space, fx.inferred.grammar, fx.sequences, cfg);
  EXPECT_LT(r.epoch_nll.back(), 0.1 * r.initial_nll);
  Trajectory t = rollout(fx.inferred.grammar, fx.space, fx.net, EnvConfig(), 0, true);
  ASSERT_EQ(t.outcome, Outcome::kComplete);
  EXPECT_TRUE(is_isomorphic(*t.molecule, parse_smiles(smiles))) << write_smiles(*t.molecule);
}

TEST(Pretrain, GreedyDecodingReproducesATrainingMolecule) {
  Fixture fx = make_fixture(kSmall, 16, 2, 1, 0.5);
  PretrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.05;
  cfg.minibatch = 16;
  pretrain(fx.net, fx.space, fx.inferred.grammar, fx.sequences, cfg);
  Trajectory t = rollout(fx.inferred.grammar, fx.space, fx.net, EnvConfig(), 0, true);
  ASSERT_EQ(t.outcome, Outcome::kComplete);
  bool found = false;
  for (const char *s: kSmall)
    found = found || is_isomorphic(*t.molecule, parse_smiles(s));
  EXPECT_TRUE(found) << write_smiles(*t.molecule);
}

// --------------------------------------------------------- optimization

TEST(Optimize, ConstantRewardFillsPoolWithConstant) {
  Fixture fx = make_fixture(kSmall);
  auto reward = make_reward(RewardSpec::parse("constant(0.25)"));
  OptimizeConfig cfg;
  cfg.rounds = 3;
  cfg.ppo.batch_size = 8;
  cfg.ppo.epochs = 1;
  cfg.top_k = 5;
  OptimizeResult r = optimize(fx.inferred.grammar, fx.space, fx.net, *reward, cfg);
  ASSERT_FALSE(r.pool.empty());
  EXPECT_LE(r.pool.size(), 5u);
  for (const ScoredMolecule &m: r.pool)
    EXPECT_EQ(m.score, 0.25);
  for (std::size_t i = 0; i < r.pool.size(); ++i)
    for (std::size_t j = i + 1; j < r.pool.size(); ++j)
      EXPECT_FALSE(is_isomorphic(r.pool[i].molecule, r.pool[j].molecule));
  EXPECT_EQ(r.history.size(), 3u);
}

TEST(Optimize, PoolIsRankedAndSequencesDecode) {
  Fixture fx = make_fixture(kSmall);
  auto reward = make_reward(RewardSpec::parse("mw_range(60,90)"));
  OptimizeConfig cfg;
  cfg.rounds = 4;
  cfg.ppo.batch_size = 8;
  cfg.ppo.epochs = 1;
  cfg.reseed_every = 2;
  OptimizeResult r = optimize(fx.inferred.grammar, fx.space, fx.net, *reward, cfg);
  for (std::size_t i = 0; i + 1 < r.pool.size(); ++i)
    EXPECT_GE(r.pool[i].score, r.pool[i + 1].score);
  for (const ScoredMolecule &m: r.pool) {
    EXPECT_TRUE(is_isomorphic(decode(fx.inferred.grammar, m.sequence), m.molecule));
    EXPECT_DOUBLE_EQ(m.score, mw_range_reward(m.molecule, 60, 90));
  }
}

TEST(Optimize, DeterministicAcrossRunsAndThreads) {
  Fixture fx = make_fixture(kSmall);
  OptimizeConfig cfg;
  cfg.rounds = 3;
  cfg.ppo.batch_size = 8;
  cfg.ppo.epochs = 1;
  cfg.reseed_every = 2;
  cfg.seed = 77;
  auto run = [&](int threads) {
    PolicyNetwork net = fx.net;
    auto reward = make_reward(RewardSpec::parse("ring_count"));
    OptimizeConfig c = cfg;
    c.threads = threads;
    OptimizeResult r = optimize(fx.inferred.grammar, fx.space, net, *reward, c);
    std::string trace;
    for (const RoundLog &l: r.history)
      trace += l.to_json().dump() + "\n";
    for (const ScoredMolecule &m: r.pool)
      trace += write_smiles(m.molecule) + "\n";
    return std::make_pair(trace, net.params());
  };
  auto a = run(1), b = run(1), c = run(3);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.first, c.first);
  EXPECT_EQ(a.second, c.second);
}

TEST(Optimize, BudgetCapsEvaluatorQueries) {
  Fixture fx = make_fixture(kSmall);
  const std::string log = ::testing::TempDir() + "molnce_budget_log.txt";
  std::remove(log.c_str());
  RewardSpec spec;
  spec.kind = RewardKind::kExternal;
  spec.command = toy_evaluator(log);
  OptimizeConfig cfg;
  cfg.rounds = 50;
  cfg.ppo.batch_size = 16;
  cfg.ppo.epochs = 1;
  OptimizeResult r;
  {
    auto reward = make_reward(spec, 20);
    r = optimize(fx.inferred.grammar, fx.space, fx.net, *reward, cfg);
    EXPECT_EQ(reward->evaluations(), 20);
  }
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_LT(r.history.size(), 50u);
  EXPECT_EQ(count_lines(log), 20);
  std::ifstream in(log);
  std::set<std::string> seen;
  std::string line;
  while (std::getline(in, line))
    seen.insert(line);
  EXPECT_EQ(seen.size(), 20u);
}

TEST(Optimize, DeriveSeedSeparatesStreams) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t a = 0; a < 20; ++a)
    for (std::uint64_t b = 0; b < 20; ++b)
      seeds.insert(derive_seed(5, a, b));
  EXPECT_EQ(seeds.size(), 400u);
  EXPECT_EQ(derive_seed(5, 1, 2), derive_seed(5, 1, 2));
}
