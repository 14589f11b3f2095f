//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/rl.h"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "molnce/chem.h"
#include "molnce/error.h"
#include "molnce/isomorphism.h"
#include "molnce/parallel.h"
#include "molnce/smiles.h"

namespace molnce {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Splits at commas outside parentheses and brackets.
std::vector<std::string> split_args(std::string_view s) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '(' || c == '[')
      ++depth;
    else if (c == ')' || c == ']')
      --depth;
    else if (c == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

double parse_number(const std::string &s, const char *what) {
  char *end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0 || !std::isfinite(v))
    throw std::invalid_argument(std::string("reward: bad ") + what + " '" + s + "'");
  return v;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const char *kind_name(RewardKind kind) {
  switch (kind) {
  case RewardKind::kMwRange: return "mw_range";
  case RewardKind::kRingCount: return "ring_count";
  case RewardKind::kSimilarity: return "similarity";
  case RewardKind::kExternal: return "external";
  case RewardKind::kConstant: return "constant";
  }
  return "?";
}

RewardKind kind_from_name(const std::string &name) {
  for (RewardKind k: { RewardKind::kMwRange, RewardKind::kRingCount,
                       RewardKind::kSimilarity, RewardKind::kExternal,
                       RewardKind::kConstant })
    if (name == kind_name(k))
      return k;
  throw std::invalid_argument("unknown reward '" + name + "'");
}

}  // namespace

// ------------------------------------------------------------ RewardSpec

void RewardSpec::validate() const {
  if (!std::isfinite(scale) || !std::isfinite(offset))
    throw std::invalid_argument("reward scale and offset must be finite");
  switch (kind) {
  case RewardKind::kMwRange:
    if (!(lo < hi))
      throw std::invalid_argument("mw_range requires lo < hi");
    break;
  case RewardKind::kSimilarity:
    if (!(delta >= 0.0 && delta <= 1.0))
      throw std::invalid_argument("similarity threshold must lie in [0, 1]");
    if (!inner)
      throw std::invalid_argument("similarity reward needs an inner reward");
    if (target.empty())
      throw std::invalid_argument("similarity reward needs a target molecule");
    inner->validate();
    break;
  case RewardKind::kExternal:
    if (command.empty())
      throw std::invalid_argument("external reward needs a command");
    break;
  case RewardKind::kConstant:
    if (!std::isfinite(constant))
      throw std::invalid_argument("constant reward must be finite");
    break;
  case RewardKind::kRingCount:
    break;
  }
}

RewardSpec RewardSpec::parse(std::string_view text) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  RewardSpec spec;
  if (open == std::string::npos) {
    spec.kind = kind_from_name(s);
    if (spec.kind != RewardKind::kRingCount)
      throw std::invalid_argument("reward '" + s + "' needs arguments");
    return spec;
  }
  if (s.back() != ')')
    throw std::invalid_argument("reward '" + s + "' is missing ')'");
  spec.kind = kind_from_name(trim(s.substr(0, open)));
  const std::string body = s.substr(open + 1, s.size() - open - 2);
  if (spec.kind == RewardKind::kExternal) {
    spec.command = trim(body);
  } else {
    std::vector<std::string> args = split_args(body);
    auto expect = [&](std::size_t n) {
      if (args.size() != n)
        throw std::invalid_argument(std::string(kind_name(spec.kind)) + " takes "
                                    + std::to_string(n) + " arguments");
    };
    switch (spec.kind) {
    case RewardKind::kMwRange:
      expect(2);
      spec.lo = parse_number(args[0], "lower bound");
      spec.hi = parse_number(args[1], "upper bound");
      break;
    case RewardKind::kConstant:
      expect(1);
      spec.constant = parse_number(args[0], "constant");
      break;
    case RewardKind::kSimilarity:
      expect(3);
      spec.target = args[0];
      spec.delta = parse_number(args[1], "threshold");
      spec.inner = std::make_shared<RewardSpec>(parse(args[2]));
      break;
    case RewardKind::kRingCount:
      if (!(args.size() == 1 && args[0].empty()))
        throw std::invalid_argument("ring_count takes no arguments");
      break;
    case RewardKind::kExternal:
      break;
    }
  }
  spec.validate();
  return spec;
}

std::string RewardSpec::to_string() const {
  switch (kind) {
  case RewardKind::kMwRange:
    return "mw_range(" + format_number(lo) + "," + format_number(hi) + ")";
  case RewardKind::kRingCount:
    return "ring_count";
  case RewardKind::kSimilarity:
    return "similarity(" + target + "," + format_number(delta) + ","
           + (inner ? inner->to_string() : std::string()) + ")";
  case RewardKind::kExternal:
    return "external(" + command + ")";
  case RewardKind::kConstant:
    return "constant(" + format_number(constant) + ")";
  }
  return {};
}

nlohmann::json RewardSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = kind_name(kind);
  switch (kind) {
  case RewardKind::kMwRange:
    j["lo"] = lo;
    j["hi"] = hi;
    break;
  case RewardKind::kSimilarity:
    j["target"] = target;
    j["delta"] = delta;
    j["inner"] = inner ? inner->to_json() : nlohmann::json();
    break;
  case RewardKind::kExternal:
    j["command"] = command;
    break;
  case RewardKind::kConstant:
    j["constant"] = constant;
    break;
  case RewardKind::kRingCount:
    break;
  }
  j["scale"] = scale;
  j["offset"] = offset;
  return j;
}

RewardSpec RewardSpec::from_json(const nlohmann::json &j) {
  RewardSpec spec;
  try {
    spec.kind = kind_from_name(j.at("kind").get<std::string>());
    spec.lo = j.value("lo", 0.0);
    spec.hi = j.value("hi", 0.0);
    spec.target = j.value("target", std::string());
    spec.delta = j.value("delta", 0.0);
    if (j.contains("inner") && !j.at("inner").is_null())
      spec.inner = std::make_shared<RewardSpec>(from_json(j.at("inner")));
    spec.command = j.value("command", std::string());
    spec.constant = j.value("constant", 0.0);
    spec.scale = j.value("scale", 1.0);
    spec.offset = j.value("offset", 0.0);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("reward specification: ") + e.what());
  } catch (const std::invalid_argument &e) {
    throw DataError(e.what());
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument &e) {
    throw DataError(e.what());
  }
  return spec;
}

// ------------------------------------------------------------- rewards

double mw_range_reward(const OrderedMolGraph &m, double lo, double hi) {
  const double center = (lo + hi) / 2;
  const double half = (hi - lo) / 2;
  return 1.0 / (1.0 + std::abs(molecular_weight(m) - center) / half);
}

double similarity_constrained_reward(
    const OrderedMolGraph &m, const Fingerprint &target, double delta,
    const std::function<double(const OrderedMolGraph &)> &inner) {
  const Fingerprint fp = circular_fingerprint(m, target.radius(), target.nbits());
  if (tanimoto(fp, target) < delta)
    return -1.0;
  return inner(m);
}

ExternalEvaluator::ExternalEvaluator(const std::string &command, int budget)
    : budget_(budget) {
  std::signal(SIGPIPE, SIG_IGN);
  int in[2], out[2];
  if (pipe(in) != 0)
    throw EvaluatorProtocolError("cannot create evaluator pipes");
  if (pipe(out) != 0) {
    close(in[0]);
    close(in[1]);
    throw EvaluatorProtocolError("cannot create evaluator pipes");
  }
  const pid_t pid = fork();
  if (pid < 0) {
    close(in[0]);
    close(in[1]);
    close(out[0]);
    close(out[1]);
    throw EvaluatorProtocolError("cannot start evaluator");
  }
  if (pid == 0) {
    dup2(in[0], STDIN_FILENO);
    dup2(out[1], STDOUT_FILENO);
    close(in[0]);
    close(in[1]);
    close(out[0]);
    close(out[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
    _exit(127);
  }
  close(in[0]);
  close(out[1]);
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
}

ExternalEvaluator::~ExternalEvaluator() {
  if (to_child_ >= 0)
    close(to_child_);
  if (from_child_ >= 0)
    close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 200; ++i) {
      if (waitpid(pid_, &status, WNOHANG) != 0)
        return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }
}

int ExternalEvaluator::used() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return used_;
}

double ExternalEvaluator::query(const std::string &smiles) {
  const std::string line = smiles + "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = write(to_child_, line.data() + sent, line.size() - sent);
    if (n < 0) {
      if (errno == EINTR)
        continue;
      throw EvaluatorProtocolError("evaluator closed its input");
    }
    sent += static_cast<std::size_t>(n);
  }
  std::size_t eol;
  while ((eol = pending_.find('\n')) == std::string::npos) {
    char buf[4096];
    const ssize_t n = read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR)
      continue;
    if (n <= 0)
      throw EvaluatorProtocolError("evaluator closed its output");
    pending_.append(buf, static_cast<std::size_t>(n));
  }
  const std::string reply = trim(pending_.substr(0, eol));
  pending_.erase(0, eol + 1);
  char *end = nullptr;
  const double v = std::strtod(reply.c_str(), &end);
  if (reply.empty() || end != reply.c_str() + reply.size() || !std::isfinite(v))
    throw EvaluatorProtocolError("evaluator replied '" + reply + "' to " + smiles);
  return v;
}

double ExternalEvaluator::evaluate(const OrderedMolGraph &m) {
  const std::uint64_t key = invariant_hash(m);
  std::lock_guard<std::mutex> lock(mutex_);
  auto &bucket = cache_[key];
  for (const Entry &e: bucket)
    if (is_isomorphic(e.graph, m))
      return e.value;
  if (budget_ > 0 && used_ >= budget_)
    throw BudgetExhausted("evaluation budget of " + std::to_string(budget_)
                          + " molecules is used up");
  ++used_;
  const double v = query(write_smiles(m));
  bucket.push_back({ m, v });
  return v;
}

namespace {

class SpecReward: public Reward {
public:
  SpecReward(const RewardSpec &spec, int budget): spec_(spec) {
    spec_.validate();
    switch (spec_.kind) {
    case RewardKind::kSimilarity:
      target_ = circular_fingerprint(parse_smiles(spec_.target));
      inner_ = std::make_unique<SpecReward>(*spec_.inner, budget);
      break;
    case RewardKind::kExternal:
      evaluator_ = std::make_unique<ExternalEvaluator>(spec_.command, budget);
      break;
    default:
      break;
    }
  }

  double score(const OrderedMolGraph &m) override {
    double raw = 0.0;
    switch (spec_.kind) {
    case RewardKind::kMwRange:
      raw = mw_range_reward(m, spec_.lo, spec_.hi);
      break;
    case RewardKind::kRingCount:
      raw = ring_count(m);
      break;
    case RewardKind::kSimilarity:
      raw = similarity_constrained_reward(
          m, target_, spec_.delta,
          [this](const OrderedMolGraph &g) { return inner_->score(g); });
      break;
    case RewardKind::kExternal:
      raw = evaluator_->evaluate(m);
      break;
    case RewardKind::kConstant:
      raw = spec_.constant;
      break;
    }
    return spec_.scale * raw + spec_.offset;
  }

  int evaluations() const override {
    if (evaluator_)
      return evaluator_->used();
    return inner_ ? inner_->evaluations() : 0;
  }

private:
  RewardSpec spec_;
  Fingerprint target_;
  std::unique_ptr<SpecReward> inner_;
  std::unique_ptr<ExternalEvaluator> evaluator_;
};

}  // namespace

std::unique_ptr<Reward> make_reward(const RewardSpec &spec, int budget) {
  return std::make_unique<SpecReward>(spec, budget);
}

// ---------------------------------------------------------- environment

StepResult env_step(const Grammar &grammar, DerivationState &state, RuleId action,
                    const EnvConfig &config, Reward &reward) {
  apply_rule_in_place(grammar, state, action);
  StepResult out;
  if (state.complete()) {
    out.done = true;
    try {
      out.reward = reward.score(state.graph());
      out.outcome = Outcome::kComplete;
    } catch (const BudgetExhausted &) {
      out.reward = config.r_incomp;
      out.outcome = Outcome::kIncomplete;
    }
    return out;
  }
  if (state.steps() >= config.step_limit()) {
    out = { config.r_incomp, true, Outcome::kLimit };
  } else if (legal_rules(grammar, state).empty()) {
    out = { config.r_incomp, true, Outcome::kDeadEnd };
  } else {
    out = { config.r_eps, false, Outcome::kComplete };
  }
  return out;
}

RuleSequence Trajectory::sequence() const {
  RuleSequence seq;
  seq.reserve(steps.size());
  for (const TrajectoryStep &s: steps)
    seq.push_back(s.action);
  return seq;
}

Trajectory rollout(const Grammar &grammar, const FeatureSpace &space,
                   const PolicyNetwork &net, const EnvConfig &config,
                   std::uint64_t seed, bool greedy) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  DerivationState state;
  Trajectory traj;
  std::vector<RuleId> legal = legal_rules(grammar, state);
  if (legal.empty()) {
    traj.outcome = Outcome::kDeadEnd;
    return traj;
  }
  while (true) {
    const Featurization f = featurize(space, state);
    const Eigen::VectorXd logp = masked_log_softmax(net.logits(f), legal);
    std::size_t k = 0;
    if (greedy) {
      logp.maxCoeff(&k);
    } else {
      const double u = uniform(rng);
      double cum = 0.0;
      k = legal.size() - 1;
      for (std::size_t r = 0; r < legal.size(); ++r) {
        cum += std::exp(logp[static_cast<Eigen::Index>(r)]);
        if (u < cum) {
          k = r;
          break;
        }
      }
    }
    TrajectoryStep step;
    step.state = state;
    step.action = legal[k];
    step.log_prob = logp[static_cast<Eigen::Index>(k)];
    step.reward = config.r_eps;
    step.value = net.value(f);
    step.legal = std::move(legal);
    apply_production(state, grammar.rule(step.action), step.action);
    traj.steps.push_back(std::move(step));

    if (state.complete()) {
      traj.outcome = Outcome::kComplete;
      traj.molecule = state.graph();
      break;
    }
    if (state.steps() >= config.step_limit()) {
      traj.outcome = Outcome::kLimit;
      traj.steps.back().reward = config.r_incomp;
      break;
    }
    legal = legal_rules(grammar, state);
    if (legal.empty()) {
      traj.outcome = Outcome::kDeadEnd;
      traj.steps.back().reward = config.r_incomp;
      break;
    }
  }
  return traj;
}

bool assign_rewards(std::span<Trajectory> batch, Reward &reward,
                    const EnvConfig &config) {
  bool ok = true;
  for (Trajectory &t: batch) {
    if (t.outcome != Outcome::kComplete || t.steps.empty())
      continue;
    try {
      const double s = reward.score(*t.molecule);
      t.score = s;
      t.steps.back().reward = s;
    } catch (const BudgetExhausted &) {
      ok = false;
      t.outcome = Outcome::kIncomplete;
      t.steps.back().reward = config.r_incomp;
    }
  }
  return ok;
}

// ------------------------------------------------------------------ PPO

void PPOConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0))
    throw std::invalid_argument("clip must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0) || !(lambda > 0.0 && lambda <= 1.0))
    throw std::invalid_argument("gamma and lambda must lie in (0, 1]");
  if (!(learning_rate > 0.0) || !(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("learning rate must be positive and momentum in [0, 1)");
  if (entropy < 0.0 || critic_weight < 0.0)
    throw std::invalid_argument("loss weights must be non-negative");
  if (epochs < 0 || batch_size < 1 || minibatch < 0)
    throw std::invalid_argument("epochs, batch size and minibatch must be non-negative");
}

nlohmann::json PPOConfig::to_json() const {
  return { { "clip", clip },
           { "gamma", gamma },
           { "lambda", lambda },
           { "entropy", entropy },
           { "critic_weight", critic_weight },
           { "learning_rate", learning_rate },
           { "momentum", momentum },
           { "epochs", epochs },
           { "batch_size", batch_size },
           { "minibatch", minibatch },
           { "budget", budget } };
}

Advantages compute_gae(const Trajectory &traj, double gamma, double lambda) {
  const std::size_t n = traj.steps.size();
  Advantages out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double next = k + 1 < n ? traj.steps[k + 1].value : 0.0;
    const double delta = traj.steps[k].reward + gamma * next - traj.steps[k].value;
    running = delta + gamma * lambda * running;
    out.advantages[k] = running;
    out.returns[k] = running + traj.steps[k].value;
  }
  return out;
}

Advantages batch_advantages(std::span<const Trajectory> batch, double gamma,
                            double lambda) {
  Advantages all;
  for (const Trajectory &t: batch) {
    Advantages a = compute_gae(t, gamma, lambda);
    all.advantages.insert(all.advantages.end(), a.advantages.begin(), a.advantages.end());
    all.returns.insert(all.returns.end(), a.returns.begin(), a.returns.end());
  }
  const std::size_t n = all.advantages.size();
  if (n == 0)
    return all;
  const double mean = std::accumulate(all.advantages.begin(), all.advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a: all.advantages)
    var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double &a: all.advantages)
    a = (a - mean) / (sd + 1e-8);
  return all;
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

void Optimizer::step(std::vector<double> &params, const std::vector<double> &grad) {
  if (velocity_.size() != params.size())
    velocity_.assign(params.size(), 0.0);
  for (std::size_t k = 0; k < params.size(); ++k) {
    velocity_[k] = momentum_ * velocity_[k] + grad[k];
    params[k] += lr_ * velocity_[k];
  }
}

namespace {

constexpr int kGradientChunks = 16;

struct Sample {
  const Featurization *features;
  std::span<const RuleId> legal;
  RuleId action;
};

struct ChunkStats {
  double ratio = 0.0, clipped = 0.0, entropy = 0.0, critic = 0.0, surrogate = 0.0;
  double nll = 0.0;
};

// Sums per-sample gradients over a fixed partition into kGradientChunks
// contiguous chunks, then adds the chunks in order, so the result does not
// depend on the number of threads.
template <class WeightFor>
std::vector<double> chunked_gradient(const PolicyNetwork &net,
                                     std::span<const std::size_t> items,
                                     std::span<const Sample> samples,
                                     const WeightFor &weight_for, int threads,
                                     ChunkStats &stats) {
  const int n = static_cast<int>(items.size());
  const int chunks = std::min(kGradientChunks, std::max(n, 1));
  std::vector<std::vector<double>> grads(chunks);
  std::vector<ChunkStats> chunk_stats(chunks);
  parallel_for(chunks, threads, [&](int c) {
    grads[c].assign(net.size(), 0.0);
    const int begin = static_cast<int>(static_cast<long>(n) * c / chunks);
    const int end = static_cast<int>(static_cast<long>(n) * (c + 1) / chunks);
    for (int k = begin; k < end; ++k) {
      const std::size_t item = items[k];
      const Sample &s = samples[item];
      net.adaptive_backward(
          *s.features, s.legal, s.action,
          [&](const StepEvaluation &ev) { return weight_for(item, ev, chunk_stats[c]); },
          grads[c]);
    }
  });
  std::vector<double> total(net.size(), 0.0);
  for (int c = 0; c < chunks; ++c) {
    for (std::size_t k = 0; k < total.size(); ++k)
      total[k] += grads[c][k];
    stats.ratio += chunk_stats[c].ratio;
    stats.clipped += chunk_stats[c].clipped;
    stats.entropy += chunk_stats[c].entropy;
    stats.critic += chunk_stats[c].critic;
    stats.surrogate += chunk_stats[c].surrogate;
    stats.nll += chunk_stats[c].nll;
  }
  for (double g: total)
    if (!std::isfinite(g))
      throw NumericalError("non-finite gradient");
  return total;
}

}  // namespace

PPOMetrics ppo_update(PolicyNetwork &net, Optimizer &optimizer,
                      const FeatureSpace &space, std::span<const Trajectory> batch,
                      const PPOConfig &config, std::uint64_t seed, int threads) {
  config.validate();
  std::vector<const TrajectoryStep *> steps;
  for (const Trajectory &t: batch)
    for (const TrajectoryStep &s: t.steps)
      steps.push_back(&s);
  PPOMetrics metrics;
  const std::size_t n = steps.size();
  if (n == 0)
    return metrics;
  const Advantages adv = batch_advantages(batch, config.gamma, config.lambda);
  std::vector<Featurization> features(n);
  parallel_for(static_cast<int>(n), threads,
               [&](int k) { features[k] = featurize(space, steps[k]->state); });
  std::vector<Sample> samples(n);
  for (std::size_t k = 0; k < n; ++k)
    samples[k] = { &features[k], steps[k]->legal, steps[k]->action };

  std::mt19937_64 rng(seed);
  const std::size_t mb = config.minibatch > 0
                             ? std::min<std::size_t>(n, static_cast<std::size_t>(config.minibatch))
                             : n;
  std::vector<std::size_t> order(n);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t { 0 });
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t stop = std::min(n, start + mb);
      const double m = static_cast<double>(stop - start);
      auto weight_for = [&](std::size_t item, const StepEvaluation &ev, ChunkStats &st) {
        const double a = adv.advantages[item];
        const double ratio = std::exp(ev.log_prob - steps[item]->log_prob);
        const double clipped = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
        const double err = ev.value - adv.returns[item];
        st.ratio += ratio;
        st.clipped += std::abs(ratio - 1.0) > config.clip ? 1.0 : 0.0;
        st.entropy += ev.entropy;
        st.critic += err * err;
        st.surrogate += std::min(ratio * a, clipped * a);
        LossWeights w;
        w.log_prob = ratio * a <= clipped * a ? ratio * a / m : 0.0;
        w.entropy = config.entropy / m;
        w.value = -2.0 * config.critic_weight * err / m;
        return w;
      };
      ChunkStats st;
      std::vector<double> grad = chunked_gradient(
          net, std::span<const std::size_t>(order).subspan(start, stop - start),
          samples, weight_for, threads, st);
      optimizer.step(net.params(), grad);
      if (epoch == 0) {
        metrics.mean_ratio += st.ratio;
        metrics.clip_fraction += st.clipped;
        metrics.entropy += st.entropy;
        metrics.critic_loss += st.critic;
        metrics.surrogate += st.surrogate;
      }
    }
  }
  if (config.epochs > 0) {
    const double dn = static_cast<double>(n);
    metrics.mean_ratio /= dn;
    metrics.clip_fraction /= dn;
    metrics.entropy /= dn;
    metrics.critic_loss /= dn;
    metrics.surrogate /= dn;
  }
  metrics.steps = static_cast<long>(n);
  return metrics;
}

// ---------------------------------------------------------- pretraining

namespace {

struct ExpertSet {
  std::vector<Featurization> features;
  std::vector<std::vector<RuleId>> legal;
  std::vector<RuleId> actions;

  std::vector<Sample> samples() const {
    std::vector<Sample> out(actions.size());
    for (std::size_t k = 0; k < actions.size(); ++k)
      out[k] = { &features[k], legal[k], actions[k] };
    return out;
  }
};

ExpertSet replay(const FeatureSpace &space, const Grammar &grammar,
                 std::span<const RuleSequence> sequences) {
  ExpertSet set;
  for (const RuleSequence &seq: sequences) {
    DerivationState state;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (state.complete())
        throw IllegalSequence(i, "the derivation is already complete");
      std::vector<RuleId> legal = legal_rules(grammar, state);
      if (std::find(legal.begin(), legal.end(), seq[i]) == legal.end())
        throw IllegalSequence(i, "rule " + std::to_string(seq[i])
                                     + " is not legal at this step");
      set.features.push_back(featurize(space, state));
      set.legal.push_back(std::move(legal));
      set.actions.push_back(seq[i]);
      apply_production(state, grammar.rule(seq[i]), seq[i]);
    }
  }
  return set;
}

double mean_nll(const PolicyNetwork &net, const ExpertSet &set, int threads) {
  const int n = static_cast<int>(set.actions.size());
  if (n == 0)
    return 0.0;
  std::vector<double> nll(n);
  parallel_for(n, threads, [&](int k) {
    const Featurization &f = set.features[k];
    if (set.legal[k].size() == 1) {
      nll[k] = 0.0;
      return;
    }
    const Eigen::VectorXd logp = masked_log_softmax(net.logits(f), set.legal[k]);
    const auto pos = std::find(set.legal[k].begin(), set.legal[k].end(), set.actions[k]);
    nll[k] = -logp[pos - set.legal[k].begin()];
  });
  return std::accumulate(nll.begin(), nll.end(), 0.0) / n;
}

// One pass of teacher-forced maximum likelihood over the expert steps.
void likelihood_epoch(PolicyNetwork &net, Optimizer &optimizer, const ExpertSet &set,
                      int minibatch, std::mt19937_64 &rng, int threads) {
  const std::size_t n = set.actions.size();
  if (n == 0)
    return;
  const std::vector<Sample> samples = set.samples();
  const std::size_t mb = minibatch > 0 ? std::min<std::size_t>(n, minibatch) : n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t { 0 });
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t start = 0; start < n; start += mb) {
    const std::size_t stop = std::min(n, start + mb);
    const double m = static_cast<double>(stop - start);
    auto weight_for = [&](std::size_t, const StepEvaluation &ev, ChunkStats &st) {
      st.nll -= ev.log_prob;
      return LossWeights { 1.0 / m, 0.0, 0.0 };
    };
    ChunkStats st;
    std::vector<double> grad = chunked_gradient(
        net, std::span<const std::size_t>(order).subspan(start, stop - start), samples,
        weight_for, threads, st);
    optimizer.step(net.params(), grad);
  }
}

}  // namespace

double sequence_nll(const PolicyNetwork &net, const FeatureSpace &space,
                    const Grammar &grammar, std::span<const RuleSequence> sequences,
                    int threads) {
  return mean_nll(net, replay(space, grammar, sequences), threads);
}

PretrainReport pretrain(PolicyNetwork &net, const FeatureSpace &space,
                        const Grammar &grammar,
                        std::span<const RuleSequence> sequences,
                        const PretrainConfig &config) {
  if (config.epochs < 0 || config.minibatch < 0 || !(config.learning_rate > 0.0))
    throw std::invalid_argument("invalid pretraining configuration");
  const ExpertSet set = replay(space, grammar, sequences);
  PretrainReport report;
  report.steps = static_cast<long>(set.actions.size());
  report.initial_nll = mean_nll(net, set, config.threads);
  Optimizer optimizer(config.learning_rate, config.momentum);
  std::mt19937_64 rng(config.seed);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    likelihood_epoch(net, optimizer, set, config.minibatch, rng, config.threads);
    report.epoch_nll.push_back(mean_nll(net, set, config.threads));
  }
  return report;
}

// --------------------------------------------------------- optimization

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

nlohmann::json OptimizeConfig::to_json() const {
  nlohmann::json env_j = { { "t_max", env.t_max },
                           { "r_eps", env.r_eps },
                           { "r_incomp", env.r_incomp } };
  env_j["l_max"] = env.l_max ? nlohmann::json(*env.l_max) : nlohmann::json();
  return { { "env", env_j },
           { "ppo", ppo.to_json() },
           { "rounds", rounds },
           { "top_k", top_k },
           { "reseed_every", reseed_every },
           { "reseed_count", reseed_count },
           { "stop_on_budget", stop_on_budget },
           { "seed", seed },
           { "threads", threads } };
}

nlohmann::json RoundLog::to_json() const {
  return { { "round", round },
           { "mean_reward", mean_reward },
           { "best_score", best_score },
           { "entropy", entropy },
           { "clip_fraction", clip_fraction },
           { "evaluations", evaluations },
           { "complete_fraction", complete_fraction },
           { "mean_ratio", ppo.mean_ratio },
           { "critic_loss", ppo.critic_loss } };
}

namespace {

// Top-k distinct molecules, best first; earlier entries win ties.
class Pool {
public:
  explicit Pool(int capacity): capacity_(capacity) { }

  void offer(const OrderedMolGraph &m, double score, const RuleSequence &seq) {
    if (capacity_ <= 0)
      return;
    const std::uint64_t h = invariant_hash(m);
    for (std::size_t k = 0; k < entries_.size(); ++k)
      if (hashes_[k] == h && is_isomorphic(entries_[k].molecule, m))
        return;
    if (static_cast<int>(entries_.size()) == capacity_ && score <= entries_.back().score)
      return;
    auto pos = std::upper_bound(entries_.begin(), entries_.end(), score,
                                [](double s, const ScoredMolecule &e) { return s > e.score; });
    const auto at = pos - entries_.begin();
    entries_.insert(pos, { m, score, seq });
    hashes_.insert(hashes_.begin() + at, h);
    if (static_cast<int>(entries_.size()) > capacity_) {
      entries_.pop_back();
      hashes_.pop_back();
    }
  }

  const std::vector<ScoredMolecule> &entries() const { return entries_; }

private:
  int capacity_;
  std::vector<ScoredMolecule> entries_;
  std::vector<std::uint64_t> hashes_;
};

}  // namespace

OptimizeResult optimize(const Grammar &grammar, const FeatureSpace &space,
                        PolicyNetwork &net, Reward &reward,
                        const OptimizeConfig &config, const RoundCallback &on_round) {
  config.env.validate();
  config.ppo.validate();
  if (config.rounds < 0 || config.top_k < 0 || config.reseed_every < 0
      || config.reseed_count < 0)
    throw std::invalid_argument("invalid optimization configuration");
  Optimizer optimizer(config.ppo.learning_rate, config.ppo.momentum);
  Pool pool(config.top_k);
  OptimizeResult result;
  const int episodes = config.ppo.batch_size;
  for (int round = 0; round < config.rounds; ++round) {
    std::vector<Trajectory> batch(episodes);
    parallel_for(episodes, config.threads, [&](int e) {
      batch[e] = rollout(grammar, space, net, config.env,
                         derive_seed(config.seed, static_cast<std::uint64_t>(round), e));
    });
    const bool ok = assign_rewards(batch, reward, config.env);

    RoundLog log;
    log.round = round;
    int complete = 0;
    for (const Trajectory &t: batch) {
      for (const TrajectoryStep &s: t.steps)
        log.mean_reward += s.reward;
      if (t.score) {
        ++complete;
        pool.offer(*t.molecule, *t.score, t.sequence());
      }
    }
    log.mean_reward /= episodes;
    log.complete_fraction = static_cast<double>(complete) / episodes;

    log.ppo = ppo_update(net, optimizer, space, batch, config.ppo,
                         derive_seed(config.seed, static_cast<std::uint64_t>(round),
                                     0xc0ffeeULL),
                         config.threads);
    if (config.reseed_every > 0 && (round + 1) % config.reseed_every == 0
        && !pool.entries().empty()) {
      std::vector<RuleSequence> expert;
      for (const ScoredMolecule &s: pool.entries()) {
        if (static_cast<int>(expert.size()) == config.reseed_count)
          break;
        expert.push_back(s.sequence);
      }
      std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(round), 0xe4e4ULL));
      likelihood_epoch(net, optimizer, replay(space, grammar, expert), config.ppo.minibatch,
                       rng, config.threads);
    }

    log.best_score = pool.entries().empty() ? 0.0 : pool.entries().front().score;
    log.entropy = log.ppo.entropy;
    log.clip_fraction = log.ppo.clip_fraction;
    log.evaluations = reward.evaluations();
    result.history.push_back(log);
    if (on_round)
      on_round(log);
    result.last_batch = std::move(batch);
    if (!ok) {
      result.budget_exhausted = true;
      if (config.stop_on_budget)
        break;
    }
  }
  result.pool = pool.entries();
  return result;
}

}  // namespace molnce
