//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "molnce/derivation.h"
#include "molnce/error.h"
#include "molnce/inference.h"
#include "molnce/policy.h"
#include "molnce/smiles.h"
#include "support/fd_oracle.h"

using namespace molnce;
using molnce::testing::random_featurization;

namespace {

Featurization permute(const Featurization &f, const std::vector<int> &perm) {
  // perm[old] = new
  Featurization out;
  const int n = f.size();
  out.nodes = Eigen::MatrixXd::Zero(n, f.nodes.cols());
  for (int v = 0; v < n; ++v)
    out.nodes.row(perm[v]) = f.nodes.row(v);
  out.focus = f.focus < 0 ? -1 : perm[f.focus];
  std::vector<std::tuple<int, int, int>> arcs;
  for (int k = 0; k < f.edge_count(); ++k) {
    int c = 0;
    f.edges.row(k).maxCoeff(&c);
    arcs.emplace_back(perm[f.edge_from[k]], perm[f.edge_to[k]], c);
  }
  std::sort(arcs.begin(), arcs.end());
  out.edges = Eigen::MatrixXd::Zero(f.edge_count(), f.channels());
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    auto [u, v, c] = arcs[k];
    out.edge_from.push_back(u);
    out.edge_to.push_back(v);
    out.edges(static_cast<Eigen::Index>(k), c) = 1.0;
  }
  out.index_edges();
  return out;
}

InferenceResult infer_from(std::initializer_list<const char *> smiles) {
  std::vector<OrderedMolGraph> corpus;
  for (const char *s: smiles)
    corpus.push_back(parse_smiles(s));
  return infer_grammar(corpus);
}

}  // namespace

TEST(Featurize, StartStateIsOneHotWithFocus) {
  InferenceResult res = infer_from({ "CCO" });
  FeatureSpace space = FeatureSpace::from_grammar(res.grammar);
  Featurization f = featurize(space, DerivationState());
  ASSERT_EQ(f.size(), 1);
  EXPECT_EQ(f.nodes.cols(), space.node_dim());
  EXPECT_EQ(f.focus, 0);
  EXPECT_EQ(f.nodes(0, space.focus_index()), 1.0);
  EXPECT_EQ(f.nodes(0, space.node_index(NodeLabel::start())), 1.0);
  EXPECT_EQ(f.nodes.sum(), 2.0);
  EXPECT_EQ(f.edge_count(), 0);
}

TEST(Featurize, SingleBondActivatesTwoEntries) {
  InferenceResult res = infer_from({ "CC" });
  FeatureSpace space = FeatureSpace::from_grammar(res.grammar);
  RuleSequence seq = preorder(res.trees[0]);
  DerivationState state;
  for (RuleId r: seq)
    apply_rule_in_place(res.grammar, state, r);
  Featurization f = featurize(space, state);
  EXPECT_EQ(f.focus, -1);
  EXPECT_EQ(f.nodes.col(space.focus_index()).sum(), 0.0);
  const int single = space.edge_index(EdgeLabel::bond(BondOrder::kSingle));
  Eigen::MatrixXd c = f.channel(single);
  EXPECT_EQ((c.array() != 0.0).count(), 2);
  EXPECT_EQ(c(0, 1), 1.0);
  EXPECT_EQ(c(1, 0), 1.0);
  for (int k = 0; k < f.edge_count(); ++k)
    EXPECT_EQ(f.edges.row(k).sum(), 1.0);
}

TEST(Featurize, DeterministicAndFocusAtNextNonterminal) {
  InferenceResult res = infer_from({ "CC(=O)OC1=CC=CC=C1C(=O)O" });
  FeatureSpace space = FeatureSpace::from_grammar(res.grammar);
  DerivationState state;
  for (RuleId r: preorder(res.trees[0])) {
    Featurization a = featurize(space, state), b = featurize(space, state);
    EXPECT_EQ(a.nodes, b.nodes);
    EXPECT_EQ(a.edges, b.edges);
    ASSERT_EQ(a.focus, next_nonterminal(state));
    EXPECT_EQ(a.nodes.col(space.focus_index()).sum(), 1.0);
    for (int k = 0; k < a.edge_count(); ++k)
      EXPECT_EQ(a.edges.row(k).sum(), 1.0);
    apply_rule_in_place(res.grammar, state, r);
  }
}

TEST(Gcn, ZeroWeightsGiveResidualIdentity) {
  std::mt19937_64 rng(3);
  PolicyNetwork net(NetworkShape{ 5, 3, 4, 3, 7 });
  Featurization f = random_featurization(rng, 6, 5, 3);
  Eigen::MatrixXd out = net.actor_features(f);
  ASSERT_EQ(out.rows(), 6);
  ASSERT_EQ(out.cols(), 7);
  EXPECT_EQ(out.leftCols(5), f.nodes);
  EXPECT_TRUE(out.rightCols(2).isZero(0.0));
  EXPECT_EQ(net.value(f), 0.0);
}

TEST(Gcn, NodeFeaturesWiderThanHiddenAreRejected) {
  EXPECT_THROW(PolicyNetwork(NetworkShape{ 8, 3, 4, 2, 4 }), ShapeMismatch);
  std::mt19937_64 rng(1);
  PolicyNetwork net(NetworkShape{ 4, 3, 4, 2, 4 });
  Featurization f = random_featurization(rng, 3, 4, 2);
  EXPECT_THROW(net.actor_features(f), ShapeMismatch);
}

TEST(Gcn, NoEdgeClosedFormScalar) {
  // d = 1, one channel: v <- v + tanh(b_l) per layer; value = mean(v) w + c.
  PolicyNetwork net(NetworkShape{ 1, 1, 2, 3, 1 });
  const double bias[3] = { 0.3, -0.7, 1.1 };
  for (int l = 0; l < 3; ++l) {
    net.tensor("actor.b" + std::to_string(l) + ".0")(0, 0) = bias[l];
    net.tensor("actor.W" + std::to_string(l) + ".0")(0, 0) = 5.0;  // unused without edges
    net.tensor("critic.b" + std::to_string(l) + ".0")(0, 0) = bias[l];
  }
  net.tensor("critic_head.W")(0, 0) = 2.0;
  net.tensor("critic_head.b")(0, 0) = -0.25;
  Featurization f;
  f.nodes = Eigen::MatrixXd::Zero(2, 1);
  f.nodes(0, 0) = 1.0;
  f.edges = Eigen::MatrixXd::Zero(0, 1);
  f.index_edges();
  const double shift = std::tanh(0.3) + std::tanh(-0.7) + std::tanh(1.1);
  Eigen::MatrixXd out = net.actor_features(f);
  EXPECT_NEAR(out(0, 0), 1.0 + shift, 1e-15);
  EXPECT_NEAR(out(1, 0), shift, 1e-15);
  EXPECT_NEAR(net.value(f), 2.0 * (0.5 + shift) - 0.25, 1e-15);
}

TEST(Gcn, SingleEdgeScalarTrace) {
  // d = 1, one channel, one layer, edge 0-1 with feature 1.
  PolicyNetwork net(NetworkShape{ 1, 1, 1, 1, 1 });
  net.tensor("critic.W0.0")(0, 0) = 0.8;
  net.tensor("critic.b0.0")(0, 0) = 0.1;
  net.tensor("critic_head.W")(0, 0) = 1.5;
  net.tensor("critic_head.b")(0, 0) = 0.2;
  Featurization f;
  f.nodes = Eigen::MatrixXd::Zero(2, 1);
  f.nodes(0, 0) = 1.0;
  f.edge_from = { 0, 1 };
  f.edge_to = { 1, 0 };
  f.edges = Eigen::MatrixXd::Ones(2, 1);
  f.index_edges();
  // E V = (v1, v0) = (0, 1).
  const double v0 = 1.0 + std::tanh(0.0 * 0.8 + 0.1);
  const double v1 = 0.0 + std::tanh(1.0 * 0.8 + 0.1);
  EXPECT_NEAR(net.value(f), 1.5 * (v0 + v1) / 2 + 0.2, 1e-15);
}

TEST(Gcn, PermutationEquivarianceAndInvariance) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 5;
    PolicyNetwork net(NetworkShape{ 5, 3, 6, 3, 8 });
    net.init_uniform(0.5, 100 + trial);
    Featurization f = random_featurization(rng, n, 5, 3);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Featurization g = permute(f, perm);
    Eigen::MatrixXd a = net.actor_features(f), b = net.actor_features(g);
    for (int v = 0; v < n; ++v)
      EXPECT_LT((a.row(v) - b.row(perm[v])).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(net.value(f), net.value(g), 1e-12);
    EXPECT_LT((net.logits(f) - net.logits(g)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Gcn, IsolatedNodeIsUnaffectedByOtherEdges) {
  std::mt19937_64 rng(5);
  PolicyNetwork net(NetworkShape{ 4, 2, 3, 3, 4 });
  net.init_uniform(0.3, 9);
  Featurization f = random_featurization(rng, 3, 4, 2);
  Featurization g = f;
  g.nodes.conservativeResize(4, Eigen::NoChange);
  g.nodes.row(3).setZero();
  g.nodes(3, 0) = 1.0;
  g.index_edges();
  Eigen::MatrixXd a = net.actor_features(f), b = net.actor_features(g);
  EXPECT_LT((a - b.topRows(3)).cwiseAbs().maxCoeff(), 1e-14);
  Featurization lone;
  lone.nodes = g.nodes.bottomRows(1);
  lone.edges = Eigen::MatrixXd::Zero(0, 2);
  lone.index_edges();
  EXPECT_LT((net.actor_features(lone).row(0) - b.row(3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MaskedSoftmax, SumsToOne) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd z(12);
    for (int k = 0; k < 12; ++k)
      z[k] = normal(rng);
    std::vector<RuleId> legal;
    for (RuleId r = 0; r < 12; ++r)
      if (rng() % 2)
        legal.push_back(r);
    if (legal.empty())
      legal.push_back(4);
    Eigen::VectorXd p = masked_softmax(z, legal);
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    EXPECT_GE(p.minCoeff(), 0.0);
  }
}

TEST(MaskedSoftmax, SingleLegalAndUniform) {
  Eigen::VectorXd z(4);
  z << 3.0, -1.0, 100.0, 2.0;
  std::vector<RuleId> one{ 1 };
  EXPECT_EQ(masked_softmax(z, one)[0], 1.0);
  Eigen::VectorXd flat = Eigen::VectorXd::Constant(5, 0.7);
  std::vector<RuleId> three{ 0, 2, 4 };
  Eigen::VectorXd p = masked_softmax(flat, three);
  for (int k = 0; k < 3; ++k)
    EXPECT_NEAR(p[k], 1.0 / 3.0, 1e-15);
  EXPECT_THROW(masked_softmax(z, std::span<const RuleId>()), EmptyLegalSet);
}

TEST(Policy, LogitsAreFocusRowTimesHead) {
  std::mt19937_64 rng(8);
  PolicyNetwork net(NetworkShape{ 4, 2, 5, 2, 6 });
  net.init_uniform(0.4, 77);
  Featurization f = random_featurization(rng, 5, 4, 2);
  Eigen::MatrixXd feat = net.actor_features(f);
  Eigen::VectorXd expect =
      (feat.row(f.focus) * net.tensor("policy.W") + net.tensor("policy.b")).transpose();
  EXPECT_LT((net.logits(f) - expect).cwiseAbs().maxCoeff(), 1e-14);
  Eigen::MatrixXd cf = net.critic_features(f);
  double v = (cf.colwise().mean() * net.tensor("critic_head.W"))(0, 0)
             + net.tensor("critic_head.b")(0, 0);
  EXPECT_NEAR(net.value(f), v, 1e-14);
}

TEST(Policy, ZeroCriticGivesBias) {
  std::mt19937_64 rng(4);
  PolicyNetwork net(NetworkShape{ 4, 2, 3, 2, 4 });
  net.tensor("critic_head.b")(0, 0) = 0.625;
  Featurization f = random_featurization(rng, 4, 4, 2);
  EXPECT_EQ(net.value(f), 0.625);
}

TEST(Backward, ConstantLossHasZeroGradient) {
  std::mt19937_64 rng(6);
  PolicyNetwork net(NetworkShape{ 4, 4, 5, 2, 4 });
  net.init_uniform(0.1, 1);
  Featurization f = random_featurization(rng, 5, 4, 4);
  std::vector<RuleId> legal{ 0, 3 };
  std::vector<double> g(net.size(), 0.0);
  net.backward(f, legal, 3, {}, g);
  for (double x: g)
    EXPECT_EQ(x, 0.0);
}

TEST(Backward, IllegalLogitsReceiveNoGradient) {
  std::mt19937_64 rng(12);
  PolicyNetwork net(NetworkShape{ 4, 4, 5, 2, 4 });
  net.init_uniform(0.1, 2);
  Featurization f = random_featurization(rng, 5, 4, 4);
  std::vector<RuleId> legal{ 1, 2 };
  std::vector<double> g(net.size(), 0.0);
  net.backward(f, legal, 2, { 1.0, 0.5, 0.0 }, g);
  const TensorInfo &w = net.tensor_info("policy.W");
  const TensorInfo &b = net.tensor_info("policy.b");
  for (int r: { 0, 3, 4 }) {
    for (int k = 0; k < w.rows; ++k)
      EXPECT_EQ(g[w.offset + static_cast<std::size_t>(r) * w.rows + k], 0.0);
    EXPECT_EQ(g[b.offset + r], 0.0);
  }
}

TEST(Backward, SingleLegalRuleHasZeroPolicyGradient) {
  std::mt19937_64 rng(13);
  PolicyNetwork net(NetworkShape{ 4, 4, 5, 2, 4 });
  net.init_uniform(0.1, 3);
  Featurization f = random_featurization(rng, 5, 4, 4);
  std::vector<RuleId> legal{ 2 };
  std::vector<double> g(net.size(), 0.0);
  StepEvaluation ev = net.backward(f, legal, 2, { 1.0, 1.0, 0.0 }, g);
  EXPECT_EQ(ev.log_prob, 0.0);
  EXPECT_EQ(ev.entropy, 0.0);
  for (double x: g)
    EXPECT_EQ(x, 0.0);
}

TEST(Backward, MatchesCentralDifferences) {
  molnce::testing::FdReport r = molnce::testing::finite_difference_check(20, 2024);
  EXPECT_EQ(r.instances, 20);
  EXPECT_LE(r.worst_log_prob, 1e-4);
  EXPECT_LE(r.worst_entropy, 1e-4);
  EXPECT_LE(r.worst_value, 1e-4);
  RecordProperty("rejected", r.rejected);
}

TEST(Checkpoint, BitExactReload) {
  InferenceResult res = infer_from({ "CCO", "C1=CC=CC=C1" });
  Checkpoint c;
  c.space = FeatureSpace::from_grammar(res.grammar);
  c.network = PolicyNetwork(NetworkShape{ c.space.node_dim(), c.space.edge_channels(),
                                          res.grammar.size(), 2, 16 });
  c.network.init_uniform(0.1, 42);
  std::string text = checkpoint_to_json(c).dump();
  Checkpoint back = checkpoint_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.space, c.space);
  EXPECT_EQ(back.network.shape(), c.network.shape());
  ASSERT_EQ(back.network.size(), c.network.size());
  for (std::size_t k = 0; k < c.network.size(); ++k)
    EXPECT_EQ(std::memcmp(&back.network.params()[k], &c.network.params()[k], sizeof(double)), 0);
  EXPECT_EQ(checkpoint_to_json(back).dump(), text);
}

TEST(Checkpoint, RejectsWrongVersion) {
  InferenceResult res = infer_from({ "CCO" });
  FeatureSpace space = FeatureSpace::from_grammar(res.grammar);
  Checkpoint c{ space, PolicyNetwork(NetworkShape{ space.node_dim(), space.edge_channels(),
                                                   res.grammar.size(), 1, 8 }) };
  nlohmann::json j = checkpoint_to_json(c);
  j["version"] = 99;
  EXPECT_THROW(checkpoint_from_json(j), DataError);
}
