#pragma once

// Synthetic graphs with planted communities and N(0, I) node features.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "commpool/graphio/graph.hpp"
#include "commpool/random.hpp"

namespace commpool::synthgen {

using graphio::Dataset;
using graphio::Graph;
using diffnum::Matrix;

enum class Generator { random_partition, relaxed_caveman, gaussian_partition };

inline const char* to_string(Generator g) {
  switch (g) {
    case Generator::random_partition: return "random-partition";
    case Generator::relaxed_caveman: return "relaxed-caveman";
    case Generator::gaussian_partition: return "gaussian-partition";
  }
  return "?";
}

struct SynthConfig {
  Generator generator = Generator::random_partition;
  std::size_t communities = 4;
  std::size_t mean_community_size = 6;
  double p_in = 0.9;
  double p_out = 0.05;  // inter-block probability, or rewire probability for caveman
  double size_std = 1.0;  // gaussian-partition only
  std::size_t feature_dim = 8;

  void validate() const {
    if (communities < 1 || mean_community_size < 1 || feature_dim < 1)
      throw ContractError("SynthConfig: counts must be >= 1");
    if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1) throw ContractError("SynthConfig: probability outside [0,1]");
    if (size_std < 0) throw ContractError("SynthConfig: negative size_std");
  }
};

// Calibrated per-class defaults for the three simulation classes.
inline SynthConfig default_config(Generator g) {
  SynthConfig c;
  c.generator = g;
  switch (g) {
    case Generator::random_partition:
      c.p_in = 0.9;
      c.p_out = 0.05;
      break;
    case Generator::relaxed_caveman:
      c.p_in = 1.0;
      c.p_out = 0.1;
      break;
    case Generator::gaussian_partition:
      c.p_in = 0.8;
      c.p_out = 0.1;
      c.size_std = 1.0;
      break;
  }
  return c;
}

struct LabeledGraph {
  Graph graph;
  std::vector<int> partition;  // contiguous community ids from 0
};

namespace detail {

inline Matrix normal_features(std::size_t n, std::size_t d, Rng& rng) {
  Matrix h(n, d);
  for (double& x : h.data()) x = rng.normal();
  return h;
}

inline std::vector<int> block_labels(std::span<const std::size_t> sizes) {
  std::vector<int> labels;
  for (std::size_t b = 0; b < sizes.size(); ++b) labels.insert(labels.end(), sizes[b], static_cast<int>(b));
  return labels;
}

// Planted-partition edges: p_in inside blocks, p_out across, pairs visited
// in (i < j) row-major order.
inline LabeledGraph planted_partition(std::span<const std::size_t> sizes, double p_in, double p_out, std::size_t d,
                                      Rng& rng) {
  LabeledGraph out;
  out.partition = block_labels(sizes);
  const std::size_t n = out.partition.size();
  out.graph.adjacency = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(out.partition[i] == out.partition[j] ? p_in : p_out)) out.graph.add_edge(i, j);
  out.graph.features = normal_features(n, d, rng);
  out.graph.communities = out.partition;
  return out;
}

}  // namespace detail

inline LabeledGraph gen_random_partition(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::vector<std::size_t> sizes(cfg.communities, cfg.mean_community_size);
  return detail::planted_partition(sizes, cfg.p_in, cfg.p_out, cfg.feature_dim, rng);
}

// `communities` cliques of `mean_community_size` nodes; each clique edge
// (u, v) is, with probability p_out, rewired to (u, x) for a uniform node x
// unless that would create a self-loop or duplicate edge.
inline LabeledGraph gen_relaxed_caveman(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t k = cfg.mean_community_size;
  const std::vector<std::size_t> sizes(cfg.communities, k);
  LabeledGraph out;
  out.partition = detail::block_labels(sizes);
  const std::size_t n = out.partition.size();
  Graph& g = out.graph;
  g.adjacency = Matrix(n, n);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t c = 0; c < cfg.communities; ++c)
    for (std::size_t i = c * k; i < (c + 1) * k; ++i)
      for (std::size_t j = i + 1; j < (c + 1) * k; ++j) {
        g.add_edge(i, j);
        edges.emplace_back(i, j);
      }
  for (auto [u, v] : edges) {
    if (!rng.bernoulli(cfg.p_out)) continue;
    const std::size_t x = rng.index(n);
    if (x == u || g.has_edge(u, x)) continue;
    g.adjacency(u, v) = g.adjacency(v, u) = 0.0;
    g.add_edge(u, x);
  }
  g.features = detail::normal_features(n, cfg.feature_dim, rng);
  g.communities = out.partition;
  return out;
}

// Block sizes drawn from N(mean, size_std²), clamped to >= 2, then rescaled
// to sum to communities × mean by largest remainder; edges as in the planted
// partition.
inline std::vector<std::size_t> gaussian_block_sizes(const SynthConfig& cfg, Rng& rng) {
  const std::size_t target = cfg.communities * cfg.mean_community_size;
  const double mean = static_cast<double>(cfg.mean_community_size);
  std::vector<double> raw(cfg.communities);
  for (double& s : raw) s = std::max(2.0, mean + cfg.size_std * rng.normal());
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  std::vector<std::size_t> sizes(cfg.communities);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < raw.size(); ++b) {
    const double exact = raw[b] * static_cast<double>(target) / total;
    sizes[b] = static_cast<std::size_t>(std::floor(exact));
    assigned += sizes[b];
    remainders.emplace_back(exact - std::floor(exact), b);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < target; ++i, ++assigned) ++sizes[remainders[i % remainders.size()].second];
  // Keep every block at >= min(2, mean) by borrowing from the largest block.
  const std::size_t floor_size = std::min<std::size_t>(2, cfg.mean_community_size);
  for (std::size_t& s : sizes)
    while (s < floor_size) {
      auto big = std::max_element(sizes.begin(), sizes.end());
      if (*big <= floor_size) break;
      --*big;
      ++s;
    }
  return sizes;
}

inline LabeledGraph gen_gaussian_partition(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto sizes = gaussian_block_sizes(cfg, rng);
  return detail::planted_partition(sizes, cfg.p_in, cfg.p_out, cfg.feature_dim, rng);
}

inline LabeledGraph generate(const SynthConfig& cfg, Rng& rng) {
  switch (cfg.generator) {
    case Generator::random_partition: return gen_random_partition(cfg, rng);
    case Generator::relaxed_caveman: return gen_relaxed_caveman(cfg, rng);
    case Generator::gaussian_partition: return gen_gaussian_partition(cfg, rng);
  }
  throw ContractError("unknown generator");
}

// `cliques` cliques of `size` nodes joined into a ring: in each clique the
// edge (s, s+1) is replaced by (s, s-1 mod N), s being the clique's first node.
inline LabeledGraph connected_caveman(std::size_t cliques, std::size_t size, std::size_t feature_dim, Rng& rng) {
  if (cliques < 1 || size < 2) throw ContractError("connected_caveman: need cliques >= 1 and size >= 2");
  const std::vector<std::size_t> sizes(cliques, size);
  LabeledGraph out = detail::planted_partition(sizes, 1.0, 0.0, feature_dim, rng);
  const std::size_t n = cliques * size;
  if (cliques > 1)
    for (std::size_t s = 0; s < n; s += size) {
      out.graph.adjacency(s, s + 1) = out.graph.adjacency(s + 1, s) = 0.0;
      out.graph.add_edge(s, (s + n - 1) % n);
    }
  return out;
}

struct SimulationSpec {
  std::size_t graphs_per_class = 50;
  std::vector<SynthConfig> classes = {default_config(Generator::random_partition),
                                      default_config(Generator::relaxed_caveman),
                                      default_config(Generator::gaussian_partition)};
};

// One class per generator; graph (c, i) is generated from a seed derived
// from (seed, c, i), so the dataset does not depend on generation order.
inline Dataset build_simulation_dataset(std::uint64_t seed, const SimulationSpec& spec = {}) {
  if (spec.graphs_per_class < 1) throw ContractError("build_simulation_dataset: graphs_per_class must be >= 1");
  if (spec.classes.empty()) throw ContractError("build_simulation_dataset: no classes");
  Dataset ds;
  ds.name = "SIMULATION";
  ds.class_count = spec.classes.size();
  ds.feature_dim = spec.classes.front().feature_dim;
  ds.feature_source = graphio::FeatureSource::node_attributes;
  for (const auto& c : spec.classes)
    if (c.feature_dim != ds.feature_dim) throw ContractError("build_simulation_dataset: feature dims differ");
  for (std::size_t c = 0; c < spec.classes.size(); ++c)
    for (std::size_t i = 0; i < spec.graphs_per_class; ++i) {
      Rng rng(derive_seed(seed, {c, i}));
      LabeledGraph lg = generate(spec.classes[c], rng);
      lg.graph.label = static_cast<int>(c);
      ds.graphs.push_back(std::move(lg.graph));
    }
  return ds;
}

}  // namespace commpool::synthgen
