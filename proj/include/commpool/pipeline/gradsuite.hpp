#pragma once

// Finite-difference checks for every differentiable building block, on
// small random graphs.

#include <string>
#include <vector>

#include "commpool/classify/mlp.hpp"
#include "commpool/diffnum/gradcheck.hpp"
#include "commpool/encoder/vgae.hpp"

namespace commpool::pipeline {

inline constexpr double kLayerTolerance = 1e-5;
inline constexpr double kVgaeTolerance = 1e-4;

struct GradSuiteCase {
  std::string name;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_relative_error < tolerance; }
};

namespace detail {

inline diffnum::Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  diffnum::Matrix m(r, c);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

inline graphio::Graph random_small_graph(std::size_t n, std::size_t d, Rng& rng) {
  graphio::Graph g;
  g.adjacency = diffnum::Matrix(n, n);
  g.features = random_matrix(n, d, rng);
  for (std::size_t i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);  // keep it connected
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j)
      if (rng.bernoulli(0.3)) g.add_edge(i, j);
  return g;
}

inline double worst(const std::vector<diffnum::GradCheckResult>& rs) {
  double w = 0.0;
  for (const auto& r : rs) w = std::max(w, r.max_relative_error);
  return w;
}

}  // namespace detail

inline std::vector<GradSuiteCase> run_grad_suite(std::uint64_t seed = 0) {
  using diffnum::Parameter;
  using diffnum::Tape;
  using encoder::Activation;
  Rng rng(seed);
  std::vector<GradSuiteCase> out;
  const std::size_t n = 5, d = 3, h = 4;
  const graphio::Graph g = detail::random_small_graph(n, d, rng);

  for (Activation act : {Activation::identity, Activation::relu}) {
    Parameter w("w", detail::random_matrix(d, h, rng));
    Tape t;
    const auto a_hat = t.input(graphio::normalize_adjacency(g.adjacency));
    const auto y = encoder::gcn_layer(t, a_hat, t.input(g.features), t.parameter(w), act);
    const auto loss = t.reduce_sum(t.hadamard(y, t.input(detail::random_matrix(n, h, rng))));
    std::vector<Parameter*> ps{&w};
    out.push_back({act == Activation::relu ? "gcn_layer/relu" : "gcn_layer/identity",
                   detail::worst(diffnum::check_tape_gradients(t, loss, ps)), kLayerTolerance});
  }

  for (Activation act : {Activation::identity, Activation::relu}) {
    Parameter w("w", detail::random_matrix(d, h, rng));
    Parameter a("a", detail::random_matrix(2 * h, 1, rng));
    Tape t;
    const auto ctx = encoder::make_gat_context(t, g.adjacency);
    const auto y = encoder::gat_layer(t, ctx, t.input(g.features), t.parameter(w), t.parameter(a), act);
    const auto loss = t.reduce_sum(t.hadamard(y, t.input(detail::random_matrix(n, h, rng))));
    std::vector<Parameter*> ps{&w, &a};
    out.push_back({act == Activation::relu ? "gat_layer/relu" : "gat_layer/identity",
                   detail::worst(diffnum::check_tape_gradients(t, loss, ps)), kLayerTolerance});
  }

  for (encoder::LayerKind kind : {encoder::LayerKind::gcn, encoder::LayerKind::gat}) {
    for (encoder::Objective obj : {encoder::Objective::elbo, encoder::Objective::paper_literal}) {
      encoder::VgaeConfig cfg;
      cfg.layer = kind;
      cfg.hidden_dim = 4;
      cfg.latent_dim = 2;
      cfg.objective = obj;
      auto params = encoder::init_vgae(d, cfg, rng);
      Tape t;
      const auto pn = encoder::bind_params(t, params);
      const auto nodes = encoder::build_vgae_graph(t, pn, kind, g, cfg);
      t.set_input(nodes.noise, detail::random_matrix(n, cfg.latent_dim, rng));
      auto ps = params.trainable();
      std::string name = std::string("vgae_loss/") + (kind == encoder::LayerKind::gcn ? "gcn" : "gat") +
                         (obj == encoder::Objective::elbo ? "/elbo" : "/paper-literal");
      out.push_back({name, detail::worst(diffnum::check_tape_gradients(t, nodes.objective, ps)), kVgaeTolerance});
    }
  }

  {
    const std::size_t batch = 6, classes = 3;
    classify::MlpConfig cfg;
    cfg.hidden1 = 5;
    cfg.hidden2 = 4;
    auto params = classify::init_mlp(d, classes, cfg, rng);
    for (Parameter* p : {&params.b1, &params.b2, &params.b3}) p->value = detail::random_matrix(1, p->value.cols(), rng, 0.1);
    std::vector<int> labels;
    for (std::size_t i = 0; i < batch; ++i) labels.push_back(static_cast<int>(i % classes));
    Tape t;
    const auto net = classify::build_mlp(t, params, t.input(detail::random_matrix(batch, d, rng)));
    const auto loss = classify::build_cross_entropy(t, net.probs, labels);
    auto ps = params.trainable();
    out.push_back({"mlp/cross_entropy", detail::worst(diffnum::check_tape_gradients(t, loss, ps)), kLayerTolerance});
  }
  return out;
}

}  // namespace commpool::pipeline
