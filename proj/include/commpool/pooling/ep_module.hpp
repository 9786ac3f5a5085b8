#pragma once

// One Embedding-Pooling stage: embed with a trained VGAE (noise-free mean),
// capture communities, pool them onto their medoids, and coarsen the graph.

#include <cmath>
#include <optional>

#include "commpool/encoder/vgae.hpp"
#include "commpool/pooling/community_pool.hpp"

namespace commpool::pooling {

enum class Clustering { pam, semi_random };

struct PoolConfig {
  double ratio = 0.5;
  std::optional<std::size_t> community_count;  // overrides ratio when set
  SimilarityKind similarity = SimilarityKind::l1_reciprocal;
  CoarsenMode coarsen = CoarsenMode::medoid_edge;
  Clustering clustering = Clustering::pam;
  std::size_t restarts = 5;
};

inline std::size_t community_count_for(std::size_t n, const PoolConfig& cfg) {
  if (cfg.community_count) return std::clamp<std::size_t>(*cfg.community_count, 1, n);
  if (!(cfg.ratio > 0.0 && cfg.ratio <= 1.0)) throw ContractError("pool config: ratio must be in (0, 1]");
  const auto l = static_cast<std::size_t>(std::llround(cfg.ratio * static_cast<double>(n)));
  return std::clamp<std::size_t>(l, 1, n);
}

struct EpOutput {
  PooledGraph pooled;
  CommunityAssignment assignment;
};

// Pools from a precomputed embedding; ep_module_apply embeds first.
inline EpOutput pool_embedding(const graphio::Graph& g, const Matrix& z, const PoolConfig& cfg, Rng& rng) {
  const std::size_t l = community_count_for(g.node_count(), cfg);
  EpOutput out;
  out.assignment = cfg.clustering == Clustering::pam ? pam_cluster(z, l, rng, cfg.restarts) : semi_random_assign(z, l, rng);
  out.pooled.graph = graphio::Graph(coarsen_graph(g.adjacency, out.assignment, cfg.coarsen),
                                    pool_communities(z, out.assignment, cfg.similarity));
  out.pooled.graph.label = g.label;
  out.pooled.origin = out.assignment.medoids;
  return out;
}

inline EpOutput ep_module_apply(const graphio::Graph& g, const encoder::VgaeParams& params, const PoolConfig& cfg,
                                Rng& rng) {
  return pool_embedding(g, encoder::embed_mean(g, params), cfg, rng);
}

}  // namespace commpool::pooling
