#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "commpool/diffnum/matrix.hpp"

namespace commpool::graphio {

using diffnum::Matrix;

// Undirected attributed graph. Self-loops are never stored; they are added
// only inside normalize_adjacency.
struct Graph {
  Matrix adjacency;  // N x N, symmetric, {0,1}, zero diagonal
  Matrix features;   // N x d
  std::optional<int> label;
  std::optional<std::vector<int>> communities;  // ground-truth node partition

  Graph() = default;
  Graph(Matrix a, Matrix h) : adjacency(std::move(a)), features(std::move(h)) {}

  std::size_t node_count() const noexcept { return adjacency.rows(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }

  bool has_edge(std::size_t i, std::size_t j) const { return adjacency(i, j) != 0.0; }

  std::size_t edge_count() const {
    std::size_t e = 0;
    for (std::size_t i = 0; i < node_count(); ++i)
      for (std::size_t j = i + 1; j < node_count(); ++j) e += has_edge(i, j) ? 1 : 0;
    return e;
  }

  std::size_t degree(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t j = 0; j < node_count(); ++j) d += has_edge(i, j) ? 1 : 0;
    return d;
  }

  void add_edge(std::size_t i, std::size_t j) {
    if (i == j) return;
    adjacency(i, j) = 1.0;
    adjacency(j, i) = 1.0;
  }

  // Throws ContractError describing the first violated invariant.
  void validate(std::optional<std::size_t> class_count = std::nullopt) const {
    const std::size_t n = node_count();
    if (adjacency.cols() != n) throw ContractError("graph: adjacency not square");
    if (features.rows() != n) throw ContractError("graph: feature rows != node count");
    for (std::size_t i = 0; i < n; ++i) {
      if (adjacency(i, i) != 0.0) throw ContractError("graph: nonzero diagonal");
      for (std::size_t j = 0; j < n; ++j) {
        const double a = adjacency(i, j);
        if (a != 0.0 && a != 1.0) throw ContractError("graph: adjacency not binary");
        if (a != adjacency(j, i)) throw ContractError("graph: adjacency not symmetric");
      }
    }
    if (!features.all_finite()) throw ContractError("graph: non-finite features");
    if (label && class_count && (*label < 0 || static_cast<std::size_t>(*label) >= *class_count))
      throw ContractError("graph: label out of range");
    if (communities && communities->size() != n)
      throw ContractError("graph: community labels length != node count");
  }
};

enum class FeatureSource { node_attributes, node_labels, degree };

inline const char* to_string(FeatureSource s) {
  switch (s) {
    case FeatureSource::node_attributes: return "node_attributes";
    case FeatureSource::node_labels: return "node_labels";
    case FeatureSource::degree: return "degree";
  }
  return "?";
}

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  std::size_t class_count = 0;
  std::size_t feature_dim = 0;
  FeatureSource feature_source = FeatureSource::node_attributes;

  std::size_t size() const noexcept { return graphs.size(); }

  bool has_communities() const {
    return !graphs.empty() &&
           std::all_of(graphs.begin(), graphs.end(), [](const Graph& g) { return g.communities.has_value(); });
  }

  double mean_node_count() const {
    double s = 0.0;
    for (const auto& g : graphs) s += static_cast<double>(g.node_count());
    return graphs.empty() ? 0.0 : s / static_cast<double>(graphs.size());
  }
  double mean_edge_count() const {
    double s = 0.0;
    for (const auto& g : graphs) s += static_cast<double>(g.edge_count());
    return graphs.empty() ? 0.0 : s / static_cast<double>(graphs.size());
  }
};

// D^-1/2 (A + I) D^-1/2 with D the degree of A + I.
inline Matrix normalize_adjacency(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double v = (i == j ? 1.0 : 0.0) + a(i, j);
      if (v != 0.0) out(i, j) = inv_sqrt[i] * v * inv_sqrt[j];
    }
  return out;
}

}  // namespace commpool::graphio
