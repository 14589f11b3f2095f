//
// molnce - molecular graph grammars and policy optimization
// SPDX-License-Identifier: Apache-2.0
//

#include "molnce/policy.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "molnce/error.h"

namespace molnce {
namespace {
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using CMap = Eigen::Map<const Eigen::MatrixXd>;
using MMap = Eigen::Map<Eigen::MatrixXd>;

struct LayerTape {
  Mat v;   // V^(l)
  Mat e;   // E^(l)
  Mat u;   // V^(l) [W_(1) .. W_(S)]
  Mat t;   // [Tanh(E_(i) V W_(i) + b_(i))]_i
  Mat x;   // Concat(V_i, V_j) per directed edge
  Mat p;   // pre-activation of e_ij
  Mat c;   // Concat(e_ij, E_ij)
  Mat q;   // pre-activation of E_ij
};

struct Tape {
  std::vector<LayerTape> layers;
};

// Offsets of one GCN's tensors inside the flat parameter buffer. The S
// weight matrices of a layer are adjacent, so they read as one d x S*d
// matrix, and so are its S biases.
struct GcnLayout {
  int layers = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::size_t> w, b;            // index l
  std::vector<std::size_t> we, be, wE, bE;  // index l, for l < L - 1
};

class Gcn {
public:
  explicit Gcn(const GcnLayout &layout): lay_(layout) { }

  Mat forward(const double *params, const Featurization &f, Tape *tape) const {
    const int n = f.size(), d = lay_.width, S = lay_.channels;
    const int m = f.edge_count();
    if (f.channels() != S)
      throw ShapeMismatch("featurization has " + std::to_string(f.channels())
                          + " edge channels, network expects "
                          + std::to_string(S));
    if (f.nodes.cols() > d)
      throw ShapeMismatch("node features wider than the hidden width");
    if (static_cast<int>(f.first_edge.size()) != n + 1)
      throw ShapeMismatch("featurization edges are not indexed");

    Mat v = Mat::Zero(n, d);
    v.leftCols(f.nodes.cols()) = f.nodes;
    Mat e = f.edges;
    if (tape)
      tape->layers.assign(lay_.layers, {});

    for (int l = 0; l < lay_.layers; ++l) {
      CMap w(params + lay_.w[l], d, S * d);
      CMap b(params + lay_.b[l], 1, S * d);
      // E_(i) V W_(i) = E_(i) (V W_(i)).
      Mat u = v * w;
      Mat z = b.replicate(n, 1);
      for (int src = 0; src < n; ++src) {
        for (int k = f.first_edge[src]; k < f.first_edge[src + 1]; ++k) {
          const int dst = f.edge_to[k];
          for (int i = 0; i < S; ++i) {
            const double a = e(k, i);
            if (a != 0.0)
              z.row(src).segment(i * d, d) += a * u.row(dst).segment(i * d, d);
          }
        }
      }
      // Tanh through the vectorized exp; absolute error below 1e-15.
      Mat t = (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
      Mat next = v;
      for (int i = 0; i < S; ++i)
        next += t.middleCols(i * d, d) / S;
      LayerTape *lt = tape ? &tape->layers[l] : nullptr;
      if (l + 1 < lay_.layers) {
        Mat x(m, 2 * d);
        for (int k = 0; k < m; ++k) {
          x.row(k).head(d) = next.row(f.edge_from[k]);
          x.row(k).tail(d) = next.row(f.edge_to[k]);
        }
        CMap we(params + lay_.we[l], 2 * d, S);
        CMap be(params + lay_.be[l], 1, S);
        CMap wE(params + lay_.wE[l], 2 * S, S);
        CMap bE(params + lay_.bE[l], 1, S);
        Mat p = (x * we).rowwise() + be.row(0);
        Mat c(m, 2 * S);
        c.leftCols(S) = p.cwiseMax(0.0);
        c.rightCols(S) = e;
        Mat q = (c * wE).rowwise() + bE.row(0);
        if (lt) {
          lt->e = std::move(e);
          lt->x = std::move(x);
          lt->p = std::move(p);
          lt->c = std::move(c);
        }
        e = q.cwiseMax(0.0);
        if (lt)
          lt->q = std::move(q);
      } else if (lt) {
        lt->e = std::move(e);
      }
      if (lt) {
        lt->v = std::move(v);
        lt->u = std::move(u);
        lt->t = std::move(t);
      }
      v = std::move(next);
    }
    return v;
  }

  void backward(const double *params, const Featurization &f, const Tape &tape,
                Mat grad_v, double *grad) const {
    const int n = f.size(), d = lay_.width, S = lay_.channels;
    const int m = f.edge_count();
    Mat grad_e;  // gradient w.r.t. E^(l+1)
    for (int l = lay_.layers - 1; l >= 0; --l) {
      const LayerTape &lt = tape.layers[l];
      Mat grad_e_prev = Mat::Zero(m, S);
      if (l + 1 < lay_.layers) {
        CMap we(params + lay_.we[l], 2 * d, S);
        CMap wE(params + lay_.wE[l], 2 * S, S);
        Mat dq = grad_e.array() * (lt.q.array() > 0.0).cast<double>();
        MMap(grad + lay_.wE[l], 2 * S, S) += lt.c.transpose() * dq;
        MMap(grad + lay_.bE[l], 1, S) += dq.colwise().sum();
        Mat dc = dq * wE.transpose();
        grad_e_prev = dc.rightCols(S);
        Mat dp = dc.leftCols(S).array() * (lt.p.array() > 0.0).cast<double>();
        MMap(grad + lay_.we[l], 2 * d, S) += lt.x.transpose() * dp;
        MMap(grad + lay_.be[l], 1, S) += dp.colwise().sum();
        Mat dx = dp * we.transpose();
        for (int k = 0; k < m; ++k) {
          grad_v.row(f.edge_from[k]) += dx.row(k).head(d);
          grad_v.row(f.edge_to[k]) += dx.row(k).tail(d);
        }
      }
      CMap w(params + lay_.w[l], d, S * d);
      // dz = dL/dZ for Z = [E_(i) V W_(i) + b_(i)]_i.
      Mat dz(n, S * d);
      for (int i = 0; i < S; ++i)
        dz.middleCols(i * d, d) =
            (grad_v / S).array() * (1.0 - lt.t.middleCols(i * d, d).array().square());
      MMap(grad + lay_.b[l], 1, S * d) += dz.colwise().sum();
      // g = [E_(i)^T dz_(i)]_i, the gradient w.r.t. U = V W.
      Mat g = Mat::Zero(n, S * d);
      for (int src = 0; src < n; ++src) {
        for (int k = f.first_edge[src]; k < f.first_edge[src + 1]; ++k) {
          const int dst = f.edge_to[k];
          for (int i = 0; i < S; ++i) {
            grad_e_prev(k, i) += dz.row(src).segment(i * d, d).dot(lt.u.row(dst).segment(i * d, d));
            const double a = lt.e(k, i);
            if (a != 0.0)
              g.row(dst).segment(i * d, d) += a * dz.row(src).segment(i * d, d);
          }
        }
      }
      MMap(grad + lay_.w[l], d, S * d) += lt.v.transpose() * g;
      grad_v += g * w.transpose();
      grad_e = std::move(grad_e_prev);
    }
  }

private:
  const GcnLayout &lay_;
};

// Mirrors the tensor order of the PolicyNetwork constructor.
GcnLayout make_layout(std::size_t base, const NetworkShape &shape) {
  GcnLayout lay;
  lay.layers = shape.layers;
  lay.width = shape.width;
  lay.channels = shape.channels;
  const std::size_t d = shape.width, S = shape.channels;
  std::size_t at = base;
  for (int l = 0; l < shape.layers; ++l) {
    lay.w.push_back(at);
    lay.b.push_back(at + S * d * d);
    at += S * d * d + S * d;
  }
  for (int l = 0; l + 1 < shape.layers; ++l) {
    lay.we.push_back(at);
    lay.be.push_back(at + 2 * d * S);
    lay.wE.push_back(at + 2 * d * S + S);
    lay.bE.push_back(at + 2 * d * S + S + 2 * S * S);
    at += 2 * d * S + S + 2 * S * S + S;
  }
  return lay;
}

double log_sum_exp(const Vec &logits, std::span<const RuleId> legal) {
  double hi = -std::numeric_limits<double>::infinity();
  for (RuleId r: legal)
    hi = std::max(hi, logits[r]);
  double sum = 0.0;
  for (RuleId r: legal)
    sum += std::exp(logits[r] - hi);
  return hi + std::log(sum);
}
}  // namespace

FeatureSpace FeatureSpace::from_grammar(const Grammar &grammar) {
  std::set<AtomLabel> atoms;
  std::set<EdgeLabel> edges {
    EdgeLabel::empty(),
    EdgeLabel::bond(BondOrder::kSingle),
    EdgeLabel::bond(BondOrder::kDouble),
    EdgeLabel::bond(BondOrder::kTriple),
  };
  for (RuleId id = 0; id < grammar.size(); ++id) {
    const ProductionRule &r = grammar.rule(id);
    for (int v = 0; v < r.rhs.size(); ++v) {
      if (r.rhs.label(v).is_terminal())
        atoms.insert(r.rhs.label(v).atom());
      for (const Incidence &inc: r.rhs.incident(v))
        edges.insert(inc.label);
    }
    edges.insert(r.lhs.begin(), r.lhs.end());
    for (const auto &slot: r.embedding) {
      for (const EmbeddingEdge &e: slot)
        edges.insert(e.label);
    }
  }
  return { { atoms.begin(), atoms.end() }, { edges.begin(), edges.end() } };
}

int FeatureSpace::node_index(const NodeLabel &label) const {
  const int a = static_cast<int>(atoms.size());
  switch (label.kind()) {
  case NodeKind::kTerminal: {
    auto it = std::lower_bound(atoms.begin(), atoms.end(), label.atom());
    if (it == atoms.end() || *it != label.atom())
      return -1;
    return static_cast<int>(it - atoms.begin());
  }
  case NodeKind::kNonterminal:
    return a;
  case NodeKind::kEmpty:
    return a + 1;
  case NodeKind::kStart:
    return a + 2;
  }
  return -1;
}

int FeatureSpace::edge_index(const EdgeLabel &label) const {
  auto it = std::lower_bound(edges.begin(), edges.end(), label);
  if (it == edges.end() || *it != label)
    return -1;
  return static_cast<int>(it - edges.begin());
}

nlohmann::json FeatureSpace::to_json() const {
  nlohmann::json j;
  j["atoms"] = nlohmann::json::array();
  for (const AtomLabel &a: atoms)
    j["atoms"].push_back(to_string(a));
  j["edges"] = nlohmann::json::array();
  for (const EdgeLabel &e: edges)
    j["edges"].push_back(e.to_string());
  return j;
}

FeatureSpace FeatureSpace::from_json(const nlohmann::json &j) {
  FeatureSpace s;
  for (const auto &a: j.at("atoms")) {
    NodeLabel l = NodeLabel::parse(a.get<std::string>());
    if (!l.is_terminal())
      throw DataError("feature space atom is not an atom label");
    s.atoms.push_back(l.atom());
  }
  for (const auto &e: j.at("edges"))
    s.edges.push_back(EdgeLabel::parse(e.get<std::string>()));
  if (!std::is_sorted(s.atoms.begin(), s.atoms.end())
      || !std::is_sorted(s.edges.begin(), s.edges.end()))
    throw DataError("feature space labels are not sorted");
  return s;
}

Eigen::MatrixXd Featurization::channel(int i) const {
  Mat out = Mat::Zero(size(), size());
  for (int k = 0; k < edge_count(); ++k)
    out(edge_from[k], edge_to[k]) = edges(k, i);
  return out;
}

void Featurization::index_edges() {
  const int n = size();
  first_edge.assign(n + 1, 0);
  for (std::size_t k = 0; k < edge_from.size(); ++k) {
    if (k > 0 && edge_from[k] < edge_from[k - 1])
      throw ShapeMismatch("directed edges are not grouped by source");
    ++first_edge[edge_from[k] + 1];
  }
  for (int u = 0; u < n; ++u)
    first_edge[u + 1] += first_edge[u];
}

Featurization featurize(const FeatureSpace &space,
                        const DerivationState &state) {
  const OrderedMolGraph &g = state.graph();
  Featurization f;
  f.nodes = Mat::Zero(g.size(), space.node_dim());
  for (NodeId v = 0; v < g.size(); ++v) {
    const int c = space.node_index(g.label(v));
    if (c < 0)
      throw DataError("node label " + g.label(v).to_string()
                      + " is outside the feature space");
    f.nodes(v, c) = 1.0;
  }
  if (!state.complete()) {
    f.focus = next_nonterminal(state);
    f.nodes(f.focus, space.focus_index()) = 1.0;
  }
  std::vector<int> channel;
  for (NodeId v = 0; v < g.size(); ++v) {
    for (const Incidence &inc: g.incident(v)) {
      const int c = space.edge_index(inc.label);
      if (c < 0)
        throw DataError("edge label " + inc.label.to_string()
                        + " is outside the feature space");
      f.edge_from.push_back(v);
      f.edge_to.push_back(inc.neighbor);
      channel.push_back(c);
    }
  }
  f.edges = Mat::Zero(static_cast<int>(channel.size()), space.edge_channels());
  for (std::size_t k = 0; k < channel.size(); ++k)
    f.edges(static_cast<int>(k), channel[k]) = 1.0;
  f.index_edges();
  return f;
}

std::size_t PolicyNetwork::add_tensor(const std::string &name, int rows,
                                      int cols) {
  const std::size_t offset = params_.size();
  tensors_.push_back({ name, offset, rows, cols });
  params_.resize(offset + static_cast<std::size_t>(rows) * cols, 0.0);
  return offset;
}

PolicyNetwork::PolicyNetwork(const NetworkShape &shape): shape_(shape) {
  if (shape.node_dim < 1 || shape.channels < 1 || shape.rules < 1
      || shape.layers < 1 || shape.width < 1)
    throw std::invalid_argument("network dimensions must be positive");
  if (shape.node_dim > shape.width)
    throw ShapeMismatch("node feature size " + std::to_string(shape.node_dim)
                        + " exceeds the hidden width "
                        + std::to_string(shape.width));
  const int d = shape.width, S = shape.channels;
  for (const std::string prefix: { "actor", "critic" }) {
    (prefix == "actor" ? actor_offset_ : critic_offset_) = params_.size();
    for (int l = 0; l < shape.layers; ++l) {
      const std::string tag = std::to_string(l) + ".";
      for (int i = 0; i < S; ++i)
        add_tensor(prefix + ".W" + tag + std::to_string(i), d, d);
      for (int i = 0; i < S; ++i)
        add_tensor(prefix + ".b" + tag + std::to_string(i), 1, d);
    }
    for (int l = 0; l + 1 < shape.layers; ++l) {
      const std::string tag = std::to_string(l);
      add_tensor(prefix + ".We" + tag, 2 * d, S);
      add_tensor(prefix + ".be" + tag, 1, S);
      add_tensor(prefix + ".WE" + tag, 2 * S, S);
      add_tensor(prefix + ".bE" + tag, 1, S);
    }
  }
  policy_w_ = add_tensor("policy.W", d, shape.rules);
  policy_b_ = add_tensor("policy.b", 1, shape.rules);
  critic_w_ = add_tensor("critic_head.W", d, 1);
  critic_b_ = add_tensor("critic_head.b", 1, 1);
}

const TensorInfo &PolicyNetwork::tensor_info(const std::string &name) const {
  for (const TensorInfo &t: tensors_) {
    if (t.name == name)
      return t;
  }
  throw std::out_of_range("no tensor named " + name);
}

Eigen::Map<Eigen::MatrixXd> PolicyNetwork::tensor(const std::string &name) {
  const TensorInfo &t = tensor_info(name);
  return { params_.data() + t.offset, t.rows, t.cols };
}

void PolicyNetwork::init_uniform(double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double &p: params_)
    p = u(rng);
}

Eigen::MatrixXd PolicyNetwork::actor_features(const Featurization &f) const {
  GcnLayout lay = make_layout(actor_offset_, shape_);
  return Gcn(lay).forward(params_.data(), f, nullptr);
}

Eigen::MatrixXd PolicyNetwork::critic_features(const Featurization &f) const {
  GcnLayout lay = make_layout(critic_offset_, shape_);
  return Gcn(lay).forward(params_.data(), f, nullptr);
}

std::vector<char> PolicyNetwork::relu_pattern(const Featurization &f) const {
  std::vector<char> pattern;
  for (std::size_t base: { actor_offset_, critic_offset_ }) {
    GcnLayout lay = make_layout(base, shape_);
    Tape tape;
    Gcn(lay).forward(params_.data(), f, &tape);
    for (const LayerTape &lt: tape.layers) {
      for (const Mat *m: { &lt.p, &lt.q })
        for (Eigen::Index k = 0; k < m->size(); ++k)
          pattern.push_back(m->data()[k] > 0.0 ? 1 : 0);
    }
  }
  return pattern;
}

Eigen::VectorXd PolicyNetwork::logits(const Featurization &f) const {
  if (f.focus < 0 || f.focus >= f.size())
    throw std::invalid_argument("featurization has no focus node");
  Mat feat = actor_features(f);
  CMap w(params_.data() + policy_w_, shape_.width, shape_.rules);
  CMap b(params_.data() + policy_b_, 1, shape_.rules);
  Vec z = (feat.row(f.focus) * w + b).transpose();
  if (!z.allFinite())
    throw NumericalError("non-finite policy logits");
  return z;
}

double PolicyNetwork::value(const Featurization &f) const {
  Mat feat = critic_features(f);
  CMap w(params_.data() + critic_w_, shape_.width, 1);
  RowVec mean = feat.colwise().mean();
  const double v = (mean * w)(0, 0) + params_[critic_b_];
  if (!std::isfinite(v))
    throw NumericalError("non-finite critic value");
  return v;
}

StepEvaluation PolicyNetwork::backward(const Featurization &f,
                                       std::span<const RuleId> legal,
                                       RuleId action, const LossWeights &weights,
                                       std::vector<double> &grad) const {
  return run(f, legal, action, weights.value != 0.0,
             [&](const StepEvaluation &) { return weights; }, grad);
}

StepEvaluation PolicyNetwork::adaptive_backward(const Featurization &f,
                                                std::span<const RuleId> legal,
                                                RuleId action, const WeightFn &weights,
                                                std::vector<double> &grad) const {
  return run(f, legal, action, true, weights, grad);
}

StepEvaluation PolicyNetwork::run(const Featurization &f,
                                  std::span<const RuleId> legal, RuleId action,
                                  bool need_value, const WeightFn &weight_fn,
                                  std::vector<double> &grad) const {
  if (grad.size() != params_.size())
    throw ShapeMismatch("gradient buffer does not match the parameters");
  StepEvaluation ev;
  const int d = shape_.width;
  const double *p = params_.data();
  double *g = grad.data();

  // Actor: with a single legal rule log pi = H = 0 and the gradient vanishes.
  const bool actor = f.focus >= 0 && legal.size() != 1;
  if (f.focus >= 0) {
    if (legal.empty())
      throw EmptyLegalSet("no legal rule at the focus node");
    if (std::find(legal.begin(), legal.end(), action) == legal.end())
      throw IllegalRule("action " + std::to_string(action) + " is not legal");
  }
  GcnLayout actor_lay = make_layout(actor_offset_, shape_);
  Gcn actor_gcn(actor_lay);
  Tape actor_tape;
  Mat actor_feat;
  Vec logp, prob;
  std::size_t a = 0;
  if (actor) {
    actor_feat = actor_gcn.forward(p, f, &actor_tape);
    CMap w(p + policy_w_, d, shape_.rules);
    CMap b(p + policy_b_, 1, shape_.rules);
    Vec z = (actor_feat.row(f.focus) * w + b).transpose();
    const double lse = log_sum_exp(z, legal);
    logp.resize(static_cast<Eigen::Index>(legal.size()));
    prob.resize(static_cast<Eigen::Index>(legal.size()));
    for (std::size_t r = 0; r < legal.size(); ++r) {
      logp[r] = z[legal[r]] - lse;
      prob[r] = std::exp(logp[r]);
      if (legal[r] == action)
        a = r;
    }
    ev.log_prob = logp[a];
    ev.entropy = -(prob.array() * logp.array()).sum();
    if (!std::isfinite(ev.log_prob) || !std::isfinite(ev.entropy))
      throw NumericalError("non-finite policy output");
  }

  GcnLayout critic_lay = make_layout(critic_offset_, shape_);
  Gcn critic_gcn(critic_lay);
  Tape critic_tape;
  RowVec mean;
  if (need_value) {
    Mat feat = critic_gcn.forward(p, f, &critic_tape);
    CMap w(p + critic_w_, d, 1);
    mean = feat.colwise().mean();
    ev.value = (mean * w)(0, 0) + p[critic_b_];
    if (!std::isfinite(ev.value))
      throw NumericalError("non-finite critic value");
  }

  const LossWeights weights = weight_fn(ev);
  if (!std::isfinite(weights.log_prob) || !std::isfinite(weights.entropy)
      || !std::isfinite(weights.value))
    throw NumericalError("non-finite loss weight");

  if (actor && (weights.log_prob != 0.0 || weights.entropy != 0.0)) {
    CMap w(p + policy_w_, d, shape_.rules);
    Vec dz = Vec::Zero(shape_.rules);
    for (std::size_t r = 0; r < legal.size(); ++r) {
      double v = weights.log_prob * ((r == a ? 1.0 : 0.0) - prob[r]);
      v -= weights.entropy * prob[r] * (logp[r] + ev.entropy);
      dz[legal[r]] = v;
    }
    MMap(g + policy_w_, d, shape_.rules) += actor_feat.row(f.focus).transpose() * dz.transpose();
    MMap(g + policy_b_, 1, shape_.rules) += dz.transpose();
    Mat grad_v = Mat::Zero(f.size(), d);
    grad_v.row(f.focus) = (w * dz).transpose();
    actor_gcn.backward(p, f, actor_tape, std::move(grad_v), g);
  }

  if (need_value && weights.value != 0.0) {
    CMap w(p + critic_w_, d, 1);
    MMap(g + critic_w_, d, 1) += weights.value * mean.transpose();
    g[critic_b_] += weights.value;
    Mat grad_v = (weights.value / f.size()) * w.transpose().replicate(f.size(), 1);
    critic_gcn.backward(p, f, critic_tape, std::move(grad_v), g);
  }
  return ev;
}

nlohmann::json PolicyNetwork::to_json() const {
  nlohmann::json j;
  j["shape"] = { { "node_dim", shape_.node_dim }, { "channels", shape_.channels },
                 { "rules", shape_.rules },       { "layers", shape_.layers },
                 { "width", shape_.width } };
  j["tensors"] = nlohmann::json::array();
  for (const TensorInfo &t: tensors_) {
    std::vector<double> data(params_.begin() + static_cast<long>(t.offset),
                             params_.begin()
                                 + static_cast<long>(t.offset + static_cast<std::size_t>(t.rows) * t.cols));
    j["tensors"].push_back(
        { { "name", t.name }, { "rows", t.rows }, { "cols", t.cols }, { "data", data } });
  }
  return j;
}

PolicyNetwork PolicyNetwork::from_json(const nlohmann::json &j) {
  const auto &s = j.at("shape");
  NetworkShape shape { s.at("node_dim").get<int>(), s.at("channels").get<int>(),
                       s.at("rules").get<int>(), s.at("layers").get<int>(),
                       s.at("width").get<int>() };
  PolicyNetwork net(shape);
  const auto &tensors = j.at("tensors");
  if (tensors.size() != net.tensors_.size())
    throw DataError("checkpoint tensor count does not match its shape");
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const TensorInfo &t = net.tensors_[k];
    const auto &jt = tensors[k];
    if (jt.at("name").get<std::string>() != t.name || jt.at("rows").get<int>() != t.rows
        || jt.at("cols").get<int>() != t.cols)
      throw DataError("checkpoint tensor " + t.name + " has an unexpected shape");
    auto data = jt.at("data").get<std::vector<double>>();
    if (data.size() != static_cast<std::size_t>(t.rows) * t.cols)
      throw DataError("checkpoint tensor " + t.name + " has the wrong size");
    std::copy(data.begin(), data.end(), net.params_.begin() + static_cast<long>(t.offset));
  }
  return net;
}

Eigen::VectorXd masked_softmax(const Eigen::VectorXd &logits,
                               std::span<const RuleId> legal) {
  if (legal.empty())
    throw EmptyLegalSet("softmax over an empty legal set");
  const double lse = log_sum_exp(logits, legal);
  Vec p(legal.size());
  for (std::size_t r = 0; r < legal.size(); ++r)
    p[r] = std::exp(logits[legal[r]] - lse);
  return p;
}

Eigen::VectorXd masked_log_softmax(const Eigen::VectorXd &logits,
                                   std::span<const RuleId> legal) {
  if (legal.empty())
    throw EmptyLegalSet("softmax over an empty legal set");
  const double lse = log_sum_exp(logits, legal);
  Vec logp(legal.size());
  for (std::size_t r = 0; r < legal.size(); ++r)
    logp[r] = logits[legal[r]] - lse;
  return logp;
}

PolicyOutput policy_logits(const PolicyNetwork &net, const FeatureSpace &space,
                           const Grammar &grammar, const DerivationState &state) {
  auto legal = legal_rules(grammar, state);
  if (legal.empty())
    throw EmptyLegalSet("no legal rule at the focus node");
  PolicyOutput out;
  out.logits = net.logits(featurize(space, state));
  out.legal_mask.assign(grammar.size(), 0);
  for (RuleId r: legal)
    out.legal_mask[r] = 1;
  return out;
}

double critic_value(const PolicyNetwork &net, const FeatureSpace &space,
                    const DerivationState &state) {
  return net.value(featurize(space, state));
}

nlohmann::json checkpoint_to_json(const Checkpoint &c) {
  nlohmann::json j;
  j["version"] = kCheckpointFormatVersion;
  j["feature_space"] = c.space.to_json();
  j["network"] = c.network.to_json();
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json &j) {
  try {
    if (j.at("version").get<int>() != kCheckpointFormatVersion)
      throw DataError("unsupported checkpoint version");
    Checkpoint c { FeatureSpace::from_json(j.at("feature_space")),
                   PolicyNetwork::from_json(j.at("network")) };
    if (c.network.shape().node_dim != c.space.node_dim()
        || c.network.shape().channels != c.space.edge_channels())
      throw DataError("checkpoint network does not fit its feature space");
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace molnce
