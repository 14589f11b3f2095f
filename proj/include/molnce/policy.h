//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLNCE_POLICY_H_
#define MOLNCE_POLICY_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "molnce/derivation.h"
#include "molnce/grammar.h"

namespace molnce {

// Node and edge alphabets of a grammar, fixing the one-hot layout.
struct FeatureSpace {
  std::vector<AtomLabel> atoms;
  std::vector<EdgeLabel> edges;  // includes the placeholder label

  static FeatureSpace from_grammar(const Grammar &grammar);

  // atoms, then x, n_sigma, s, then the focus indicator.
  int node_dim() const { return static_cast<int>(atoms.size()) + 4; }
  int edge_channels() const { return static_cast<int>(edges.size()); }
  int node_index(const NodeLabel &label) const;  // -1 if absent
  int edge_index(const EdgeLabel &label) const;  // -1 if absent
  int focus_index() const { return node_dim() - 1; }

  nlohmann::json to_json() const;
  static FeatureSpace from_json(const nlohmann::json &j);
  bool operator==(const FeatureSpace &) const = default;
};

// Input features of one graph. Edge features are kept per directed edge, in
// order of the source node's incident list, which groups them by source.
struct Featurization {
  Eigen::MatrixXd nodes;           // |V| x d0
  std::vector<int> edge_from;
  std::vector<int> edge_to;
  Eigen::MatrixXd edges;           // directed edges x S_E
  std::vector<int> first_edge;     // |V| + 1 offsets into the edge rows
  int focus = -1;

  int size() const { return static_cast<int>(nodes.rows()); }
  int channels() const { return static_cast<int>(edges.cols()); }
  int edge_count() const { return static_cast<int>(edge_from.size()); }
  // Dense |V| x |V| matrix of channel i.
  Eigen::MatrixXd channel(int i) const;

  // Builds the CSR offsets from edge_from, which must be sorted.
  void index_edges();
};

// Throws DataError for labels outside the feature space.
Featurization featurize(const FeatureSpace &space, const DerivationState &state);

struct NetworkShape {
  int node_dim = 0;
  int channels = 0;
  int rules = 0;
  int layers = 3;
  int width = 64;

  bool operator==(const NetworkShape &) const = default;
};

struct TensorInfo {
  std::string name;
  std::size_t offset;
  int rows;
  int cols;
};

// Weights of the loss terms whose gradient backward() accumulates:
// log_prob * log pi(a|s) + entropy * H(pi(.|s)) + value * C(s).
struct LossWeights {
  double log_prob = 0.0;
  double entropy = 0.0;
  double value = 0.0;
};

struct StepEvaluation {
  double log_prob = 0.0;
  double entropy = 0.0;
  double value = 0.0;
};

// Actor and critic GCNs with their heads, all parameters in one flat buffer.
class PolicyNetwork {
public:
  PolicyNetwork() = default;
  explicit PolicyNetwork(const NetworkShape &shape);

  const NetworkShape &shape() const { return shape_; }
  std::size_t size() const { return params_.size(); }
  std::vector<double> &params() { return params_; }
  const std::vector<double> &params() const { return params_; }
  const std::vector<TensorInfo> &tensors() const { return tensors_; }
  const TensorInfo &tensor_info(const std::string &name) const;
  Eigen::Map<Eigen::MatrixXd> tensor(const std::string &name);

  void init_uniform(double scale, std::uint64_t seed);

  // F(H), the last-layer node features of either GCN.
  Eigen::MatrixXd actor_features(const Featurization &f) const;
  Eigen::MatrixXd critic_features(const Featurization &f) const;

  // Requires f.focus >= 0.
  Eigen::VectorXd logits(const Featurization &f) const;
  double value(const Featurization &f) const;

  // Active (1) or inactive (0) state of every ReLU in both GCNs. The loss is
  // smooth on any parameter segment along which this pattern is constant.
  std::vector<char> relu_pattern(const Featurization &f) const;

  // Adds the gradient of the weighted loss terms to grad (same layout as
  // params) and returns the evaluated terms. Throws NumericalError.
  StepEvaluation backward(const Featurization &f, std::span<const RuleId> legal,
                          RuleId action, const LossWeights &weights,
                          std::vector<double> &grad) const;

  // As above, with weights chosen from the evaluated terms (log_prob,
  // entropy and value are all computed before the call).
  using WeightFn = std::function<LossWeights(const StepEvaluation &)>;
  StepEvaluation adaptive_backward(const Featurization &f,
                                   std::span<const RuleId> legal, RuleId action,
                                   const WeightFn &weights,
                                   std::vector<double> &grad) const;

  nlohmann::json to_json() const;
  static PolicyNetwork from_json(const nlohmann::json &j);

private:
  StepEvaluation run(const Featurization &f, std::span<const RuleId> legal,
                     RuleId action, bool need_value, const WeightFn &weights,
                     std::vector<double> &grad) const;
  std::size_t add_tensor(const std::string &name, int rows, int cols);

  NetworkShape shape_;
  std::vector<double> params_;
  std::vector<TensorInfo> tensors_;
  std::size_t actor_offset_ = 0;
  std::size_t critic_offset_ = 0;
  std::size_t policy_w_ = 0, policy_b_ = 0, critic_w_ = 0, critic_b_ = 0;
};

// Probabilities of the legal rules (in the given order) under the softmax
// restricted to them. Throws EmptyLegalSet.
Eigen::VectorXd masked_softmax(const Eigen::VectorXd &logits,
                               std::span<const RuleId> legal);

// Log-probabilities of the legal rules, computed exactly as in backward().
Eigen::VectorXd masked_log_softmax(const Eigen::VectorXd &logits,
                                   std::span<const RuleId> legal);

struct PolicyOutput {
  Eigen::VectorXd logits;
  std::vector<char> legal_mask;
};

PolicyOutput policy_logits(const PolicyNetwork &net, const FeatureSpace &space,
                           const Grammar &grammar, const DerivationState &state);
double critic_value(const PolicyNetwork &net, const FeatureSpace &space,
                    const DerivationState &state);

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  FeatureSpace space;
  PolicyNetwork network;
};

nlohmann::json checkpoint_to_json(const Checkpoint &c);
Checkpoint checkpoint_from_json(const nlohmann::json &j);

}  // namespace molnce

#endif  // MOLNCE_POLICY_H_
