#pragma once

// GCN and single-head GAT layers expressed on a Tape.

#include <cmath>
#include <span>

#include "commpool/diffnum/tape.hpp"
#include "commpool/random.hpp"

namespace commpool::encoder {

using diffnum::Matrix;
using diffnum::NodeRef;
using diffnum::Parameter;
using diffnum::Tape;

enum class Activation { identity, relu };

inline NodeRef activate(Tape& t, NodeRef x, Activation act) {
  return act == Activation::relu ? t.relu(x) : x;
}

// activation(Â · H · W). Â is the normalized adjacency with self-loops.
inline NodeRef gcn_layer(Tape& t, NodeRef a_hat, NodeRef h, NodeRef w, Activation act) {
  return activate(t, t.matmul(a_hat, t.matmul(h, w)), act);
}

// Additive mask for attention logits: 0 on N(i) ∪ {i}, a large negative
// value elsewhere so the softmax weight underflows to exactly zero.
inline Matrix attention_mask(const Matrix& adjacency) {
  constexpr double kMasked = -1e9;
  const std::size_t n = adjacency.rows();
  Matrix m(n, n, kMasked);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i == j || adjacency(i, j) != 0.0) m(i, j) = 0.0;
  return m;
}

// Constant inputs a GAT layer needs for one graph; build once and share
// between the layers applied to that graph.
struct GatContext {
  NodeRef mask;       // N x N
  NodeRef ones_row;   // 1 x N
  NodeRef ones_col;   // N x 1
};

inline GatContext make_gat_context(Tape& t, const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  return {t.input(attention_mask(adjacency)), t.input(Matrix(1, n, 1.0)), t.input(Matrix(n, 1, 1.0))};
}

// Single-head attention over N(i) ∪ {i}:
//   e_ij = leaky_relu(a_srcᵀ W h_i + a_dstᵀ W h_j),  α = row_softmax(e),
//   h'_i = activation(Σ_j α_ij W h_j).
// `a` is a (2·out) x 1 column whose first half scores the centre node.
inline NodeRef gat_layer(Tape& t, const GatContext& ctx, NodeRef h, NodeRef w, NodeRef a, Activation act) {
  const NodeRef wh = t.matmul(h, w);
  const std::size_t out = t.value(wh).cols();
  if (t.value(a).rows() != 2 * out || t.value(a).cols() != 1)
    throw ShapeError("gat_layer attention", t.value(a).rows(), t.value(a).cols(), 2 * out, 1);
  const NodeRef src = t.matmul(wh, t.slice_rows(a, 0, out));        // N x 1
  const NodeRef dst = t.matmul(wh, t.slice_rows(a, out, 2 * out));  // N x 1
  const NodeRef logits = t.add(t.matmul(src, ctx.ones_row), t.matmul(ctx.ones_col, t.transpose(dst)));
  const NodeRef alpha = t.row_softmax(t.add(t.leaky_relu(logits), ctx.mask));
  return activate(t, t.matmul(alpha, wh), act);
}

// Glorot/Xavier uniform in ±sqrt(6 / (fan_in + fan_out)).
inline Matrix xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& x : m.data()) x = (2.0 * rng.uniform() - 1.0) * bound;
  return m;
}

}  // namespace commpool::encoder
