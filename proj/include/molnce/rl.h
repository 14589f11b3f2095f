//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_RL_H_
#define MOLNCE_RL_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "molnce/derivation.h"
#include "molnce/fingerprint.h"
#include "molnce/grammar.h"
#include "molnce/molgraph.h"
#include "molnce/policy.h"

namespace molnce {

// ---------------------------------------------------------------- rewards

enum class RewardKind { kMwRange, kRingCount, kSimilarity, kExternal, kConstant };

struct RewardSpec {
  RewardKind kind = RewardKind::kConstant;
  double lo = 0.0, hi = 0.0;                 // mw_range
  std::string target;                        // similarity: SMILES
  double delta = 0.0;                        // similarity threshold
  std::shared_ptr<const RewardSpec> inner;   // similarity
  std::string command;                       // external: run with /bin/sh -c
  double constant = 0.0;                     // constant
  double scale = 1.0, offset = 0.0;          // applied last

  // Throws std::invalid_argument.
  void validate() const;

  // Text form: mw_range(lo,hi) | ring_count | constant(v) |
  // similarity(SMILES,delta,inner) | external(command). Throws
  // std::invalid_argument.
  static RewardSpec parse(std::string_view text);
  std::string to_string() const;

  nlohmann::json to_json() const;
  static RewardSpec from_json(const nlohmann::json &j);
};

double mw_range_reward(const OrderedMolGraph &m, double lo, double hi);

// -1 when the similarity to the target is below delta, otherwise inner(m).
double similarity_constrained_reward(
    const OrderedMolGraph &m, const Fingerprint &target, double delta,
    const std::function<double(const OrderedMolGraph &)> &inner);

// Child process speaking the one-line-per-query protocol, with a cache of
// answered molecules (up to isomorphism) and a cap on unique queries.
// Thread-safe; calls are serialized.
class ExternalEvaluator {
public:
  // budget <= 0 means unlimited. Throws EvaluatorProtocolError if the
  // process cannot be started.
  ExternalEvaluator(const std::string &command, int budget);
  ~ExternalEvaluator();
  ExternalEvaluator(const ExternalEvaluator &) = delete;
  ExternalEvaluator &operator=(const ExternalEvaluator &) = delete;

  // Throws BudgetExhausted, EvaluatorProtocolError.
  double evaluate(const OrderedMolGraph &m);
  int used() const;
  int budget() const { return budget_; }

private:
  double query(const std::string &smiles);

  struct Entry {
    OrderedMolGraph graph;
    double value;
  };

  int budget_;
  int used_ = 0;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;
  std::unordered_map<std::uint64_t, std::vector<Entry>> cache_;
  mutable std::mutex mutex_;
};

class Reward {
public:
  virtual ~Reward() = default;
  // Throws BudgetExhausted and EvaluatorProtocolError for external rewards.
  virtual double score(const OrderedMolGraph &m) = 0;
  // Unique external evaluations so far.
  virtual int evaluations() const { return 0; }
};

// budget caps unique external queries (<= 0: unlimited).
std::unique_ptr<Reward> make_reward(const RewardSpec &spec, int budget = 0);

// ---------------------------------------------------------- environment

struct StepResult {
  double reward = 0.0;
  bool done = false;
  Outcome outcome = Outcome::kComplete;  // meaningful when done
};

// Applies a legal action and reports the transition. A finished molecule is
// scored by `reward`; a step limit or a state with no legal rule ends the
// episode with r_incomp; an exhausted budget does too (outcome kIncomplete).
StepResult env_step(const Grammar &grammar, DerivationState &state, RuleId action,
                    const EnvConfig &config, Reward &reward);

struct TrajectoryStep {
  DerivationState state;        // before the action
  std::vector<RuleId> legal;
  RuleId action = 0;
  double log_prob = 0.0;        // behavior policy
  double reward = 0.0;
  double value = 0.0;           // critic
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Outcome outcome = Outcome::kIncomplete;
  std::optional<OrderedMolGraph> molecule;
  std::optional<double> score;  // task reward of a completed molecule

  RuleSequence sequence() const;
};

// Samples one episode from the policy (or takes the most probable rule when
// greedy). Rewards are left at r_eps / r_incomp; a completed molecule is
// scored later by assign_rewards.
Trajectory rollout(const Grammar &grammar, const FeatureSpace &space,
                   const PolicyNetwork &net, const EnvConfig &config,
                   std::uint64_t seed, bool greedy = false);

// Scores completed molecules in order and writes the final rewards. Returns
// false if the evaluation budget ran out (those episodes get r_incomp).
bool assign_rewards(std::span<Trajectory> batch, Reward &reward,
                    const EnvConfig &config);

// --------------------------------------------------------------- PPO

struct PPOConfig {
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  double entropy = 0.01;
  double critic_weight = 0.5;
  double learning_rate = 1e-3;
  double momentum = 0.9;        // 0 gives plain SGD
  int epochs = 4;
  int batch_size = 64;          // episodes per round
  int minibatch = 256;          // steps per gradient step, 0 = whole batch
  int budget = 0;               // unique external evaluations, 0 = unlimited

  // Throws std::invalid_argument.
  void validate() const;
  nlohmann::json to_json() const;
};

struct Advantages {
  std::vector<double> advantages;  // unnormalized
  std::vector<double> returns;     // advantages + values
};

Advantages compute_gae(const Trajectory &traj, double gamma, double lambda);

// GAE of every step of the batch, concatenated, with the advantages
// normalized to zero mean and unit variance over the batch.
Advantages batch_advantages(std::span<const Trajectory> batch, double gamma,
                            double lambda);

double clipped_surrogate(double ratio, double advantage, double clip);

// SGD with optional momentum, ascending the objective.
class Optimizer {
public:
  Optimizer() = default;
  Optimizer(double learning_rate, double momentum)
      : lr_(learning_rate), momentum_(momentum) { }

  void step(std::vector<double> &params, const std::vector<double> &grad);

private:
  double lr_ = 1e-3;
  double momentum_ = 0.0;
  std::vector<double> velocity_;
};

struct PPOMetrics {
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double entropy = 0.0;
  double critic_loss = 0.0;
  double surrogate = 0.0;
  long steps = 0;
};

// Metrics are measured before each gradient step of the first epoch.
PPOMetrics ppo_update(PolicyNetwork &net, Optimizer &optimizer,
                      const FeatureSpace &space, std::span<const Trajectory> batch,
                      const PPOConfig &config, std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------- pretraining

struct PretrainConfig {
  int epochs = 10;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int minibatch = 64;           // steps
  std::uint64_t seed = 0;
  int threads = 1;
};

struct PretrainReport {
  double initial_nll = 0.0;         // mean NLL per step before training
  std::vector<double> epoch_nll;    // mean NLL per step after each epoch
  long steps = 0;
};

// Teacher-forced maximum likelihood on rule sequences. Throws
// IllegalSequence for a sequence the grammar cannot replay.
PretrainReport pretrain(PolicyNetwork &net, const FeatureSpace &space,
                        const Grammar &grammar,
                        std::span<const RuleSequence> sequences,
                        const PretrainConfig &config);

// Mean NLL per step of the sequences under the current policy.
double sequence_nll(const PolicyNetwork &net, const FeatureSpace &space,
                    const Grammar &grammar, std::span<const RuleSequence> sequences,
                    int threads = 1);

// --------------------------------------------------------- optimization

struct OptimizeConfig {
  EnvConfig env;
  PPOConfig ppo;
  int rounds = 200;
  int top_k = 50;
  int reseed_every = 10;        // 0 disables expert re-seeding
  int reseed_count = 10;        // best pool molecules replayed
  bool stop_on_budget = true;
  std::uint64_t seed = 0;
  int threads = 1;

  nlohmann::json to_json() const;
};

struct ScoredMolecule {
  OrderedMolGraph molecule;
  double score = 0.0;
  RuleSequence sequence;
};

struct RoundLog {
  int round = 0;
  double mean_reward = 0.0;
  double best_score = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int evaluations = 0;
  double complete_fraction = 0.0;
  PPOMetrics ppo;

  nlohmann::json to_json() const;
};

struct OptimizeResult {
  std::vector<ScoredMolecule> pool;  // best first
  std::vector<RoundLog> history;
  std::vector<Trajectory> last_batch;
  bool budget_exhausted = false;
};

using RoundCallback = std::function<void(const RoundLog &)>;

OptimizeResult optimize(const Grammar &grammar, const FeatureSpace &space,
                        PolicyNetwork &net, Reward &reward,
                        const OptimizeConfig &config,
                        const RoundCallback &on_round = {});

// Deterministic per-task seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace molnce

#endif  // MOLNCE_RL_H_
