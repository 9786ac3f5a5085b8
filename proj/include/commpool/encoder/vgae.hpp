#pragma once

// Variational graph auto-encoder: a shared first GNN layer, separate second
// layers for the mean and log-variance, an inner-product decoder, and the
// balanced edge/non-edge reconstruction loss plus the Gaussian KL term.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "commpool/diffnum/adam.hpp"
#include "commpool/encoder/layers.hpp"
#include "commpool/graphio/graph.hpp"

namespace commpool::encoder {

using graphio::Graph;

enum class LayerKind { gcn, gat };
// elbo minimizes L_A + β·KL. paper_literal minimizes L_A − KL as written.
enum class Objective { elbo, paper_literal };
enum class Sharing { shared, per_graph };

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

struct VgaeConfig {
  LayerKind layer = LayerKind::gcn;
  std::size_t hidden_dim = 32;
  std::size_t latent_dim = 16;
  double learning_rate = 0.005;
  double weight_decay = 0.001;
  std::size_t max_epochs = 300;
  std::size_t patience = 50;
  Objective objective = Objective::elbo;
  double kl_weight = 1.0;
  Sharing sharing = Sharing::shared;
};

struct VgaeParams {
  LayerKind layer = LayerKind::gcn;
  Parameter w_shared;
  Parameter w_mu;
  Parameter w_logvar;
  // GAT attention columns, (2·out) x 1; unused for GCN.
  Parameter att_shared;
  Parameter att_mu;
  Parameter att_logvar;

  std::size_t input_dim() const { return w_shared.value.rows(); }
  std::size_t latent_dim() const { return w_mu.value.cols(); }

  std::vector<Parameter*> trainable() {
    std::vector<Parameter*> p{&w_shared, &w_mu, &w_logvar};
    if (layer == LayerKind::gat) p.insert(p.end(), {&att_shared, &att_mu, &att_logvar});
    return p;
  }
};

inline VgaeParams init_vgae(std::size_t input_dim, const VgaeConfig& cfg, Rng& rng) {
  VgaeParams p;
  p.layer = cfg.layer;
  p.w_shared = Parameter("w_shared", xavier_uniform(input_dim, cfg.hidden_dim, rng));
  p.w_mu = Parameter("w_mu", xavier_uniform(cfg.hidden_dim, cfg.latent_dim, rng));
  p.w_logvar = Parameter("w_logvar", xavier_uniform(cfg.hidden_dim, cfg.latent_dim, rng));
  if (cfg.layer == LayerKind::gat) {
    p.att_shared = Parameter("att_shared", xavier_uniform(2 * cfg.hidden_dim, 1, rng));
    p.att_mu = Parameter("att_mu", xavier_uniform(2 * cfg.latent_dim, 1, rng));
    p.att_logvar = Parameter("att_logvar", xavier_uniform(2 * cfg.latent_dim, 1, rng));
  }
  return p;
}

struct LatentEmbedding {
  Matrix mu;
  Matrix logvar;
  Matrix z;
};

// Parameter nodes of one tape, shared by every graph built on it.
struct VgaeParamNodes {
  NodeRef w_shared, w_mu, w_logvar, att_shared, att_mu, att_logvar;
};

inline VgaeParamNodes bind_params(Tape& t, VgaeParams& p) {
  VgaeParamNodes n{t.parameter(p.w_shared), t.parameter(p.w_mu), t.parameter(p.w_logvar), {}, {}, {}};
  if (p.layer == LayerKind::gat) {
    n.att_shared = t.parameter(p.att_shared);
    n.att_mu = t.parameter(p.att_mu);
    n.att_logvar = t.parameter(p.att_logvar);
  }
  return n;
}

// Tape nodes for one graph's encoder, decoder and loss terms.
struct VgaeGraphNodes {
  NodeRef mu, logvar, noise, z, probs, recon, kl, objective;
  bool degenerate = false;  // no edges or no non-edges
};

// Per-pair weights for the reconstruction loss over unordered off-diagonal
// pairs: 1/E₁ on edges, 1/E₂ on non-edges (zero when the class is empty).
struct ReconWeights {
  Matrix positive;
  Matrix negative;
  bool degenerate = false;
};

inline ReconWeights recon_weights(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  ReconWeights w{Matrix(n, n), Matrix(n, n), false};
  std::size_t edges = 0, non_edges = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) (adjacency(i, j) != 0.0 ? edges : non_edges) += 1;
  w.degenerate = edges == 0 || non_edges == 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (adjacency(i, j) != 0.0)
        w.positive(i, j) = 1.0 / static_cast<double>(edges);
      else
        w.negative(i, j) = 1.0 / static_cast<double>(non_edges);
    }
  return w;
}

inline VgaeGraphNodes build_vgae_graph(Tape& t, const VgaeParamNodes& pn, LayerKind layer, const Graph& g,
                                       const VgaeConfig& cfg) {
  const std::size_t n = g.node_count();
  const NodeRef h = t.input(g.features);
  NodeRef hidden, mu, raw_logvar;
  if (layer == LayerKind::gcn) {
    const NodeRef a_hat = t.input(graphio::normalize_adjacency(g.adjacency));
    hidden = gcn_layer(t, a_hat, h, pn.w_shared, Activation::relu);
    mu = gcn_layer(t, a_hat, hidden, pn.w_mu, Activation::identity);
    raw_logvar = gcn_layer(t, a_hat, hidden, pn.w_logvar, Activation::identity);
  } else {
    const GatContext ctx = make_gat_context(t, g.adjacency);
    hidden = gat_layer(t, ctx, h, pn.w_shared, pn.att_shared, Activation::relu);
    mu = gat_layer(t, ctx, hidden, pn.w_mu, pn.att_mu, Activation::identity);
    raw_logvar = gat_layer(t, ctx, hidden, pn.w_logvar, pn.att_logvar, Activation::identity);
  }
  VgaeGraphNodes out;
  out.mu = mu;
  out.logvar = t.clamp(raw_logvar, kLogVarMin, kLogVarMax);
  const std::size_t latent = t.value(mu).cols();
  out.noise = t.input(Matrix(n, latent));
  out.z = t.add(mu, t.hadamard(t.exp(t.scale(out.logvar, 0.5)), out.noise));

  const NodeRef logits = t.matmul(out.z, t.transpose(out.z));
  out.probs = t.sigmoid(logits);
  ReconWeights w = recon_weights(g.adjacency);
  out.degenerate = w.degenerate;
  const NodeRef log_p = t.log(out.probs);
  const NodeRef log_not_p = t.log(t.sigmoid(t.scale(logits, -1.0)));
  const NodeRef pos = t.reduce_sum(t.hadamard(log_p, t.input(std::move(w.positive))));
  const NodeRef neg = t.reduce_sum(t.hadamard(log_not_p, t.input(std::move(w.negative))));
  out.recon = t.scale(t.add(pos, neg), -1.0);

  // ½ Σ (μ² + σ² − log σ² − 1), averaged over nodes.
  const NodeRef ones = t.input(Matrix(n, latent, 1.0));
  const NodeRef inner = t.add(t.add(t.hadamard(mu, mu), t.exp(out.logvar)), t.scale(t.add(out.logvar, ones), -1.0));
  out.kl = t.scale(t.reduce_sum(inner), 0.5 / static_cast<double>(std::max<std::size_t>(n, 1)));

  const double kl_sign = cfg.objective == Objective::elbo ? cfg.kl_weight : -1.0;
  out.objective = t.add(out.recon, t.scale(out.kl, kl_sign));
  return out;
}

// KL(N(μ, σ²) ‖ N(0, I)) summed over latent dims, averaged over nodes.
inline double kl_term(const Matrix& mu, const Matrix& logvar) {
  diffnum::require_same_shape("kl_term", mu, logvar);
  if (mu.rows() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double m = mu.data()[i], lv = logvar.data()[i];
    s += m * m + std::exp(lv) - lv - 1.0;
  }
  return 0.5 * s / static_cast<double>(mu.rows());
}

// Balanced reconstruction loss given decoded edge probabilities.
inline double recon_loss(const Matrix& probs, const Matrix& adjacency) {
  diffnum::require_same_shape("recon_loss", probs, adjacency);
  const ReconWeights w = recon_weights(adjacency);
  double s = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i)
    for (std::size_t j = i + 1; j < probs.rows(); ++j) {
      const double p = probs(i, j);
      s -= w.positive(i, j) * std::log(std::max(p, diffnum::kLogClamp));
      s -= w.negative(i, j) * std::log(std::max(1.0 - p, diffnum::kLogClamp));
    }
  return s;
}

inline Matrix decode(const Matrix& z) {
  Matrix s = diffnum::matmul_nt(z, z);
  for (double& x : s.data()) x = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  return s;
}

// Samples Z = μ + exp(½ log σ²) ⊙ ε with ε drawn row-major from rng.
inline LatentEmbedding vgae_encode(const Graph& g, const VgaeParams& params, Rng& rng,
                                   const VgaeConfig& cfg = {}) {
  if (g.feature_dim() != params.input_dim())
    throw ShapeError("vgae_encode", g.node_count(), g.feature_dim(), params.input_dim(), params.latent_dim());
  VgaeParams local = params;
  Tape t;
  const auto pn = bind_params(t, local);
  const auto nodes = build_vgae_graph(t, pn, local.layer, g, cfg);
  Matrix eps(g.node_count(), local.latent_dim());
  for (double& x : eps.data()) x = rng.normal();
  t.set_input(nodes.noise, std::move(eps));
  t.forward(nodes.z);
  return {t.value(nodes.mu), t.value(nodes.logvar), t.value(nodes.z)};
}

// Noise-free embedding μ, used for pooling at inference.
inline Matrix embed_mean(const Graph& g, const VgaeParams& params) {
  if (g.feature_dim() != params.input_dim())
    throw ShapeError("embed_mean", g.node_count(), g.feature_dim(), params.input_dim(), params.latent_dim());
  VgaeParams local = params;
  Tape t;
  const auto pn = bind_params(t, local);
  return t.value(build_vgae_graph(t, pn, local.layer, g, {}).mu);
}

// Edge-vs-non-edge ranking AUC of sigmoid(ZZᵀ) over unordered pairs, ties
// counted as one half.
inline double reconstruction_auc(const Matrix& z, const Matrix& adjacency) {
  const Matrix p = decode(z);
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = i + 1; j < p.rows(); ++j) (adjacency(i, j) != 0.0 ? pos : neg).push_back(p(i, j));
  if (pos.empty() || neg.empty()) return 1.0;
  double wins = 0.0;
  for (double a : pos)
    for (double b : neg) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

struct VgaeTrainResult {
  VgaeParams params;
  std::vector<double> train_curve;
  std::vector<double> val_curve;
  std::size_t best_epoch = 0;
  std::size_t degenerate_graphs = 0;
};

// Full-batch Adam on the mean objective over `graphs`. Early stopping watches
// the noise-free objective on `val_graphs` (or on `graphs` when empty) and
// returns the best parameters seen.
inline VgaeTrainResult train_vgae(std::span<const Graph* const> graphs, std::span<const Graph* const> val_graphs,
                                  const VgaeConfig& cfg, Rng& rng) {
  if (graphs.empty()) throw ContractError("train_vgae: no training graphs");
  const std::size_t d = graphs.front()->feature_dim();
  for (const Graph* g : graphs)
    if (g->feature_dim() != d) throw ContractError("train_vgae: graphs disagree on feature dim");
  for (const Graph* g : val_graphs)
    if (g->feature_dim() != d) throw ContractError("train_vgae: validation feature dim mismatch");

  VgaeTrainResult res;
  res.params = init_vgae(d, cfg, rng);
  VgaeParams& params = res.params;
  auto trainable = params.trainable();

  Tape train_tape;
  const auto pn = bind_params(train_tape, params);
  std::vector<VgaeGraphNodes> train_nodes;
  NodeRef total{};
  for (const Graph* g : graphs) {
    train_nodes.push_back(build_vgae_graph(train_tape, pn, params.layer, *g, cfg));
    res.degenerate_graphs += train_nodes.back().degenerate ? 1 : 0;
    total = train_nodes.size() == 1 ? train_nodes.back().objective : train_tape.add(total, train_nodes.back().objective);
  }
  const NodeRef loss = train_tape.scale(total, 1.0 / static_cast<double>(graphs.size()));

  Tape val_tape;
  const auto vpn = bind_params(val_tape, params);
  const auto watched = val_graphs.empty() ? graphs : val_graphs;
  NodeRef val_total{};
  for (std::size_t i = 0; i < watched.size(); ++i) {
    const NodeRef obj = build_vgae_graph(val_tape, vpn, params.layer, *watched[i], cfg).objective;
    val_total = i == 0 ? obj : val_tape.add(val_total, obj);
  }
  const NodeRef val_loss = val_tape.scale(val_total, 1.0 / static_cast<double>(watched.size()));

  diffnum::AdamState adam;
  adam.learning_rate = cfg.learning_rate;
  adam.weight_decay = cfg.weight_decay;

  double best = std::numeric_limits<double>::infinity();
  VgaeParams best_params = params;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (const auto& gn : train_nodes) {
      Matrix eps = train_tape.value(gn.noise);
      for (double& x : eps.data()) x = rng.normal();
      train_tape.set_input(gn.noise, std::move(eps));
    }
    const double l = train_tape.forward(loss)(0, 0);
    if (!std::isfinite(l)) throw TrainingError("train_vgae", epoch, l);
    train_tape.backward(loss);
    diffnum::adam_step(trainable, adam);
    res.train_curve.push_back(l);

    const double v = val_tape.forward(val_loss)(0, 0);
    if (!std::isfinite(v)) throw TrainingError("train_vgae(validation)", epoch, v);
    res.val_curve.push_back(v);
    if (v < best) {
      best = v;
      best_params = params;
      res.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  params = std::move(best_params);
  return res;
}

}  // namespace commpool::encoder
