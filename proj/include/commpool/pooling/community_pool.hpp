#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "commpool/graphio/graph.hpp"
#include "commpool/pooling/pam.hpp"

namespace commpool::pooling {

enum class SimilarityKind { l1_reciprocal, cosine };
// medoid_edge: coarse nodes adjacent iff their medoids are adjacent.
// community_edge: adjacent iff any original edge joins the two communities.
enum class CoarsenMode { medoid_edge, community_edge };

inline constexpr double kDistanceFloor = 1e-8;

inline double similarity(std::span<const double> member, std::span<const double> medoid, SimilarityKind kind) {
  if (member.size() != medoid.size()) throw ShapeError("similarity", 1, member.size(), 1, medoid.size());
  if (kind == SimilarityKind::l1_reciprocal) return 1.0 / std::max(l1_distance(member, medoid), kDistanceFloor);
  double dot = 0.0, nm = 0.0, nc = 0.0;
  for (std::size_t k = 0; k < member.size(); ++k) {
    dot += member[k] * medoid[k];
    nm += member[k] * member[k];
    nc += medoid[k] * medoid[k];
  }
  if (nm == 0.0 || nc == 0.0) return 0.0;
  return dot / (std::sqrt(nm) * std::sqrt(nc));
}

// Row c: z[medoid_c] + Σ_members sim(z[m], z[medoid_c]) · z[m], members taken
// in ascending node order. Rows follow the ascending medoid order.
inline Matrix pool_communities(const Matrix& z, const CommunityAssignment& a, SimilarityKind kind) {
  if (a.membership.size() != z.rows()) throw ShapeError("pool_communities", z.rows(), z.cols(), a.membership.size(), 1);
  Matrix out(a.community_count(), z.cols());
  for (std::size_t c = 0; c < a.community_count(); ++c) {
    auto centre = z.row_span(a.medoids[c]);
    auto row = out.row_span(c);
    std::copy(centre.begin(), centre.end(), row.begin());
  }
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const std::size_t c = a.membership[i];
    if (i == a.medoids[c]) continue;
    auto member = z.row_span(i);
    const double s = similarity(member, z.row_span(a.medoids[c]), kind);
    auto row = out.row_span(c);
    for (std::size_t k = 0; k < member.size(); ++k) row[k] += s * member[k];
  }
  return out;
}

inline Matrix coarsen_graph(const Matrix& adjacency, const CommunityAssignment& a, CoarsenMode mode) {
  const std::size_t l = a.community_count();
  Matrix out(l, l);
  if (mode == CoarsenMode::medoid_edge) {
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < l; ++j)
        if (i != j && adjacency(a.medoids[i], a.medoids[j]) != 0.0) out(i, j) = 1.0;
    return out;
  }
  for (std::size_t u = 0; u < adjacency.rows(); ++u)
    for (std::size_t v = 0; v < adjacency.cols(); ++v) {
      const std::size_t cu = a.membership[u], cv = a.membership[v];
      if (cu != cv && adjacency(u, v) != 0.0) out(cu, cv) = out(cv, cu) = 1.0;
    }
  return out;
}

struct PooledGraph {
  graphio::Graph graph;
  std::vector<std::size_t> origin;  // coarse node -> original medoid index
};

}  // namespace commpool::pooling
