#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape is an append-only arena of expression nodes. Building a node
// evaluates it immediately; forward() re-evaluates every node in creation
// order, picking up the current values of inputs and parameters, so one tape
// can be reused across optimizer steps and finite-difference probes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "commpool/diffnum/matrix.hpp"

namespace commpool::diffnum {

inline constexpr double kLogClamp = 1e-12;
inline constexpr double kLeakySlope = 0.2;

// A trainable tensor. Owned by the model; tapes refer to it by pointer.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() {
    if (!grad.same_shape(value)) grad = Matrix(value.rows(), value.cols());
    grad.fill(0.0);
  }
};

enum class OpKind {
  input,
  parameter,
  matmul,
  add,
  hadamard,
  scale,
  transpose,
  sigmoid,
  relu,
  leaky_relu,
  exp,
  log,
  row_softmax,
  reduce_sum,
  reduce_mean,
  slice_rows,
  clamp,
};

const char* to_string(OpKind k);

struct NodeRef {
  std::size_t id = std::numeric_limits<std::size_t>::max();
};

class Tape {
 public:
  NodeRef input(Matrix value) {
    Node n(OpKind::input);
    n.value = std::move(value);
    return push(std::move(n));
  }

  NodeRef parameter(Parameter& p) {
    Node n(OpKind::parameter);
    n.param = &p;
    return push(std::move(n));
  }

  NodeRef matmul(NodeRef a, NodeRef b) { return binary(OpKind::matmul, a, b); }
  NodeRef add(NodeRef a, NodeRef b) { return binary(OpKind::add, a, b); }
  NodeRef hadamard(NodeRef a, NodeRef b) { return binary(OpKind::hadamard, a, b); }
  NodeRef scale(NodeRef a, double s) {
    at(a);
    Node n(OpKind::scale, a.id, kNone);
    n.s0 = s;
    return push(std::move(n));
  }
  NodeRef transpose(NodeRef a) { return unary(OpKind::transpose, a); }
  NodeRef sigmoid(NodeRef a) { return unary(OpKind::sigmoid, a); }
  NodeRef relu(NodeRef a) { return unary(OpKind::relu, a); }
  NodeRef leaky_relu(NodeRef a) { return unary(OpKind::leaky_relu, a); }
  NodeRef exp(NodeRef a) { return unary(OpKind::exp, a); }
  NodeRef log(NodeRef a) { return unary(OpKind::log, a); }
  NodeRef row_softmax(NodeRef a) { return unary(OpKind::row_softmax, a); }
  NodeRef reduce_sum(NodeRef a) { return unary(OpKind::reduce_sum, a); }
  NodeRef reduce_mean(NodeRef a) { return unary(OpKind::reduce_mean, a); }
  NodeRef slice_rows(NodeRef a, std::size_t begin, std::size_t end) {
    at(a);
    Node n(OpKind::slice_rows, a.id, kNone);
    n.i0 = begin;
    n.i1 = end;
    return push(std::move(n));
  }
  // Gradient passes through only strictly inside (lo, hi).
  NodeRef clamp(NodeRef a, double lo, double hi) {
    at(a);
    Node n(OpKind::clamp, a.id, kNone);
    n.s0 = lo;
    n.s1 = hi;
    return push(std::move(n));
  }

  void set_input(NodeRef r, Matrix value) {
    Node& n = at(r);
    if (n.op != OpKind::input) throw ContractError("set_input: node is not an input");
    n.value = std::move(value);
  }

  const Matrix& value(NodeRef r) const { return at(r).value; }
  const Matrix& grad(NodeRef r) const { return at(r).grad; }
  OpKind kind(NodeRef r) const { return at(r).op; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Re-evaluates every node up to and including root.
  const Matrix& forward(NodeRef root) {
    for (std::size_t i = 0; i <= root.id && i < nodes_.size(); ++i) evaluate(nodes_[i]);
    return at(root).value;
  }

  // Accumulates d(root)/d(node) into every node, and into the gradients of
  // the parameters reachable from root. Parameter gradients are zeroed first.
  void backward(NodeRef root) {
    const Node& r = at(root);
    if (r.value.rows() != 1 || r.value.cols() != 1)
      throw ContractError("backward: root must be 1x1, got " + std::to_string(r.value.rows()) +
                          "x" + std::to_string(r.value.cols()));
    for (std::size_t i = 0; i <= root.id; ++i) {
      Node& n = nodes_[i];
      n.grad = Matrix(n.value.rows(), n.value.cols());
      if (n.op == OpKind::parameter) n.param->zero_grad();
    }
    nodes_[root.id].grad(0, 0) = 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) propagate(nodes_[i]);
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Node {
    explicit Node(OpKind k, std::size_t a = kNone, std::size_t b = kNone) : op(k), in{a, b} {}

    OpKind op;
    std::size_t in[2];
    Matrix value;
    Matrix grad;
    Parameter* param = nullptr;
    double s0 = 0.0, s1 = 0.0;
    std::size_t i0 = 0, i1 = 0;
  };

  Node& at(NodeRef r) {
    if (r.id >= nodes_.size()) throw ContractError("tape: dangling node reference");
    return nodes_[r.id];
  }
  const Node& at(NodeRef r) const {
    if (r.id >= nodes_.size()) throw ContractError("tape: dangling node reference");
    return nodes_[r.id];
  }

  NodeRef unary(OpKind k, NodeRef a) {
    at(a);
    return push(Node(k, a.id, kNone));
  }
  NodeRef binary(OpKind k, NodeRef a, NodeRef b) {
    at(a);
    at(b);
    return push(Node(k, a.id, b.id));
  }

  NodeRef push(Node n) {
    nodes_.push_back(std::move(n));
    evaluate(nodes_.back());
    return NodeRef{nodes_.size() - 1};
  }

  const Matrix& in0(const Node& n) const { return nodes_[n.in[0]].value; }
  const Matrix& in1(const Node& n) const { return nodes_[n.in[1]].value; }

  static Matrix map(const Matrix& x, auto f) {
    Matrix out(x.rows(), x.cols());
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t i = 0; i < xd.size(); ++i) od[i] = f(xd[i]);
    return out;
  }

  static double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  }

  void evaluate(Node& n) {
    switch (n.op) {
      case OpKind::input:
        break;
      case OpKind::parameter:
        n.value = n.param->value;
        break;
      case OpKind::matmul:
        n.value = diffnum::matmul(in0(n), in1(n));
        break;
      case OpKind::add:
        require_same_shape("add", in0(n), in1(n));
        n.value = in0(n) + in1(n);
        break;
      case OpKind::hadamard: {
        require_same_shape("hadamard", in0(n), in1(n));
        n.value = in0(n);
        auto v = n.value.data();
        auto b = in1(n).data();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= b[i];
        break;
      }
      case OpKind::scale:
        n.value = n.s0 * in0(n);
        break;
      case OpKind::transpose:
        n.value = diffnum::transpose(in0(n));
        break;
      case OpKind::sigmoid:
        n.value = map(in0(n), stable_sigmoid);
        break;
      case OpKind::relu:
        n.value = map(in0(n), [](double x) { return x > 0 ? x : 0.0; });
        break;
      case OpKind::leaky_relu:
        n.value = map(in0(n), [](double x) { return x > 0 ? x : kLeakySlope * x; });
        break;
      case OpKind::exp:
        n.value = map(in0(n), [](double x) { return std::exp(x); });
        break;
      case OpKind::log:
        n.value = map(in0(n), [](double x) { return std::log(std::max(x, kLogClamp)); });
        break;
      case OpKind::row_softmax: {
        const Matrix& x = in0(n);
        n.value = Matrix(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          auto xr = x.row_span(r);
          auto yr = n.value.row_span(r);
          const double mx = *std::max_element(xr.begin(), xr.end());
          double z = 0.0;
          for (std::size_t c = 0; c < xr.size(); ++c) z += (yr[c] = std::exp(xr[c] - mx));
          for (double& y : yr) y /= z;
        }
        break;
      }
      case OpKind::reduce_sum:
      case OpKind::reduce_mean: {
        const Matrix& x = in0(n);
        double s = 0.0;
        for (double v : x.data()) s += v;
        if (n.op == OpKind::reduce_mean) {
          if (x.empty()) throw ContractError("reduce_mean: empty operand");
          s /= static_cast<double>(x.size());
        }
        n.value = Matrix(1, 1, s);
        break;
      }
      case OpKind::slice_rows: {
        const Matrix& x = in0(n);
        if (n.i0 > n.i1 || n.i1 > x.rows()) throw ShapeError("slice_rows", x.rows(), x.cols(), n.i0, n.i1);
        n.value = Matrix(n.i1 - n.i0, x.cols());
        for (std::size_t r = n.i0; r < n.i1; ++r)
          std::copy_n(x.row_span(r).begin(), x.cols(), n.value.row_span(r - n.i0).begin());
        break;
      }
      case OpKind::clamp: {
        const double lo = n.s0, hi = n.s1;
        n.value = map(in0(n), [lo, hi](double x) { return std::clamp(x, lo, hi); });
        break;
      }
    }
  }

  Matrix& g0(Node& n) { return nodes_[n.in[0]].grad; }
  Matrix& g1(Node& n) { return nodes_[n.in[1]].grad; }

  // Adds dy * f(i) elementwise into dst.
  static void accumulate(Matrix& dst, const Matrix& dy, auto f) {
    auto d = dst.data();
    auto g = dy.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * f(i);
  }

  void propagate(Node& n) {
    const Matrix& dy = n.grad;
    switch (n.op) {
      case OpKind::input:
        break;
      case OpKind::parameter:
        n.param->grad += dy;
        break;
      case OpKind::matmul:
        g0(n) += matmul_nt(dy, in1(n));
        g1(n) += matmul_tn(in0(n), dy);
        break;
      case OpKind::add:
        g0(n) += dy;
        g1(n) += dy;
        break;
      case OpKind::hadamard: {
        auto a = in0(n).data();
        auto b = in1(n).data();
        accumulate(g0(n), dy, [&](std::size_t i) { return b[i]; });
        accumulate(g1(n), dy, [&](std::size_t i) { return a[i]; });
        break;
      }
      case OpKind::scale:
        accumulate(g0(n), dy, [&](std::size_t) { return n.s0; });
        break;
      case OpKind::transpose:
        g0(n) += diffnum::transpose(dy);
        break;
      case OpKind::sigmoid: {
        auto y = n.value.data();
        accumulate(g0(n), dy, [&](std::size_t i) { return y[i] * (1.0 - y[i]); });
        break;
      }
      case OpKind::relu: {
        auto x = in0(n).data();
        accumulate(g0(n), dy, [&](std::size_t i) { return x[i] > 0 ? 1.0 : 0.0; });
        break;
      }
      case OpKind::leaky_relu: {
        auto x = in0(n).data();
        accumulate(g0(n), dy, [&](std::size_t i) { return x[i] > 0 ? 1.0 : kLeakySlope; });
        break;
      }
      case OpKind::exp: {
        auto y = n.value.data();
        accumulate(g0(n), dy, [&](std::size_t i) { return y[i]; });
        break;
      }
      case OpKind::log: {
        auto x = in0(n).data();
        accumulate(g0(n), dy, [&](std::size_t i) { return x[i] > kLogClamp ? 1.0 / x[i] : 0.0; });
        break;
      }
      case OpKind::row_softmax: {
        Matrix& gx = g0(n);
        for (std::size_t r = 0; r < n.value.rows(); ++r) {
          auto y = n.value.row_span(r);
          auto g = dy.row_span(r);
          double dot = 0.0;
          for (std::size_t c = 0; c < y.size(); ++c) dot += g[c] * y[c];
          auto out = gx.row_span(r);
          for (std::size_t c = 0; c < y.size(); ++c) out[c] += y[c] * (g[c] - dot);
        }
        break;
      }
      case OpKind::reduce_sum:
      case OpKind::reduce_mean: {
        Matrix& gx = g0(n);
        double g = dy(0, 0);
        if (n.op == OpKind::reduce_mean) g /= static_cast<double>(gx.size());
        for (double& v : gx.data()) v += g;
        break;
      }
      case OpKind::slice_rows: {
        Matrix& gx = g0(n);
        for (std::size_t r = n.i0; r < n.i1; ++r) {
          auto src = dy.row_span(r - n.i0);
          auto dst = gx.row_span(r);
          for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
        }
        break;
      }
      case OpKind::clamp: {
        auto x = in0(n).data();
        const double lo = n.s0, hi = n.s1;
        accumulate(g0(n), dy, [&](std::size_t i) { return x[i] > lo && x[i] < hi ? 1.0 : 0.0; });
        break;
      }
    }
  }

  std::vector<Node> nodes_;
};

inline const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::input: return "input";
    case OpKind::parameter: return "parameter";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::hadamard: return "hadamard";
    case OpKind::scale: return "scale";
    case OpKind::transpose: return "transpose";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::relu: return "relu";
    case OpKind::leaky_relu: return "leaky-relu";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::row_softmax: return "row-softmax";
    case OpKind::reduce_sum: return "reduce-sum";
    case OpKind::reduce_mean: return "reduce-mean";
    case OpKind::slice_rows: return "slice-rows";
    case OpKind::clamp: return "clamp";
  }
  return "?";
}

}  // namespace commpool::diffnum
