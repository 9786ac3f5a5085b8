#pragma once

// Global mean readout and the MLP classification head (two relu hidden
// layers, softmax output) trained full-batch with Adam.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "commpool/diffnum/adam.hpp"
#include "commpool/encoder/layers.hpp"

namespace commpool::classify {

using diffnum::Matrix;
using diffnum::NodeRef;
using diffnum::Parameter;
using diffnum::Tape;

// Column-wise mean of the community representations, summed in row order.
inline std::vector<double> global_readout(const Matrix& z_comm) {
  if (z_comm.rows() == 0) throw ContractError("global_readout: no rows");
  std::vector<double> out(z_comm.cols(), 0.0);
  for (std::size_t r = 0; r < z_comm.rows(); ++r)
    for (std::size_t c = 0; c < z_comm.cols(); ++c) out[c] += z_comm(r, c);
  for (double& v : out) v /= static_cast<double>(z_comm.rows());
  return out;
}

struct MlpConfig {
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
  double learning_rate = 0.005;
  double weight_decay = 0.0;
  std::size_t max_epochs = 2000;
  std::size_t patience = 50;
};

struct MlpParams {
  Parameter w1, b1, w2, b2, w3, b3;

  std::size_t input_dim() const { return w1.value.rows(); }
  std::size_t class_count() const { return w3.value.cols(); }
  std::vector<Parameter*> trainable() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
};

inline MlpParams init_mlp(std::size_t input_dim, std::size_t classes, const MlpConfig& cfg, Rng& rng) {
  using encoder::xavier_uniform;
  MlpParams p;
  p.w1 = Parameter("w1", xavier_uniform(input_dim, cfg.hidden1, rng));
  p.b1 = Parameter("b1", Matrix(1, cfg.hidden1));
  p.w2 = Parameter("w2", xavier_uniform(cfg.hidden1, cfg.hidden2, rng));
  p.b2 = Parameter("b2", Matrix(1, cfg.hidden2));
  p.w3 = Parameter("w3", xavier_uniform(cfg.hidden2, classes, rng));
  p.b3 = Parameter("b3", Matrix(1, classes));
  return p;
}

struct MlpNodes {
  NodeRef logits, probs;
};

// Batch forward: x is B x input_dim, one graph embedding per row.
inline MlpNodes build_mlp(Tape& t, MlpParams& p, NodeRef x) {
  const std::size_t batch = t.value(x).rows();
  const NodeRef ones = t.input(Matrix(batch, 1, 1.0));
  auto dense = [&](NodeRef in, Parameter& w, Parameter& b) {
    return t.add(t.matmul(in, t.parameter(w)), t.matmul(ones, t.parameter(b)));
  };
  const NodeRef h1 = t.relu(dense(x, p.w1, p.b1));
  const NodeRef h2 = t.relu(dense(h1, p.w2, p.b2));
  MlpNodes n;
  n.logits = dense(h2, p.w3, p.b3);
  n.probs = t.row_softmax(n.logits);
  return n;
}

// Mean cross-entropy of the batch against integer labels.
inline NodeRef build_cross_entropy(Tape& t, NodeRef probs, std::span<const int> labels) {
  const Matrix& p = t.value(probs);
  if (labels.size() != p.rows()) throw ShapeError("cross_entropy", p.rows(), p.cols(), labels.size(), 1);
  Matrix target(p.rows(), p.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= p.cols())
      throw ContractError("cross_entropy: label out of range");
    target(i, static_cast<std::size_t>(labels[i])) = -1.0 / static_cast<double>(labels.size());
  }
  return t.reduce_sum(t.hadamard(t.log(probs), t.input(std::move(target))));
}

inline std::vector<double> mlp_forward(std::span<const double> z_graph, const MlpParams& params) {
  if (z_graph.size() != params.input_dim())
    throw ShapeError("mlp_forward", 1, z_graph.size(), params.input_dim(), params.class_count());
  MlpParams local = params;
  Tape t;
  const auto n = build_mlp(t, local, t.input(Matrix::row(z_graph)));
  const Matrix& p = t.value(n.probs);
  return {p.data().begin(), p.data().end()};
}

inline double cross_entropy(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw ContractError("cross_entropy: label out of range");
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], diffnum::kLogClamp));
}

struct ClassifierReport {
  double accuracy = 0.0;
  std::vector<std::size_t> class_support;  // evaluated examples per true class
  std::vector<std::size_t> class_correct;
  std::vector<double> loss_curve;          // training loss per epoch
  std::vector<double> val_loss_curve;
  std::size_t best_epoch = 0;
};

inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline std::vector<int> predict(const Matrix& x, const MlpParams& params) {
  MlpParams local = params;
  Tape t;
  const auto n = build_mlp(t, local, t.input(x));
  std::vector<int> out;
  for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(static_cast<int>(argmax(t.value(n.probs).row_span(r))));
  return out;
}

// Accuracy and per-class counts; the only place evaluation labels are read.
inline ClassifierReport evaluate(const Matrix& x, std::span<const int> labels, const MlpParams& params) {
  ClassifierReport r;
  r.class_support.assign(params.class_count(), 0);
  r.class_correct.assign(params.class_count(), 0);
  if (x.rows() == 0) return r;
  const auto pred = predict(x, params);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    ++r.class_support.at(y);
    if (pred[i] == labels[i]) {
      ++correct;
      ++r.class_correct[y];
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  return r;
}

struct ClassifierResult {
  MlpParams params;
  ClassifierReport report;  // accuracy/counts on the training set
};

inline ClassifierResult train_classifier(const Matrix& train_x, std::span<const int> train_y, const Matrix& val_x,
                                         std::span<const int> val_y, std::size_t classes, const MlpConfig& cfg,
                                         Rng& rng) {
  if (train_x.rows() == 0) throw ContractError("train_classifier: empty training set");
  if (val_x.rows() != 0 && val_x.cols() != train_x.cols())
    throw ShapeError("train_classifier", train_x.rows(), train_x.cols(), val_x.rows(), val_x.cols());
  ClassifierResult res;
  res.params = init_mlp(train_x.cols(), classes, cfg, rng);
  MlpParams& params = res.params;
  auto trainable = params.trainable();

  Tape tt;
  const auto tn = build_mlp(tt, params, tt.input(train_x));
  const NodeRef loss = build_cross_entropy(tt, tn.probs, train_y);

  const bool has_val = val_x.rows() != 0;
  Tape vt;
  NodeRef vloss{};
  if (has_val) vloss = build_cross_entropy(vt, build_mlp(vt, params, vt.input(val_x)).probs, val_y);

  diffnum::AdamState adam;
  adam.learning_rate = cfg.learning_rate;
  adam.weight_decay = cfg.weight_decay;
  double best = std::numeric_limits<double>::infinity();
  MlpParams best_params = params;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double l = tt.forward(loss)(0, 0);
    if (!std::isfinite(l)) throw TrainingError("train_classifier", epoch, l);
    tt.backward(loss);
    diffnum::adam_step(trainable, adam);
    res.report.loss_curve.push_back(l);
    const double v = has_val ? vt.forward(vloss)(0, 0) : tt.forward(loss)(0, 0);
    if (!std::isfinite(v)) throw TrainingError("train_classifier(validation)", epoch, v);
    res.report.val_loss_curve.push_back(v);
    if (v < best) {
      best = v;
      best_params = params;
      res.report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  params = std::move(best_params);
  const ClassifierReport train_eval = evaluate(train_x, train_y, params);
  res.report.accuracy = train_eval.accuracy;
  res.report.class_support = train_eval.class_support;
  res.report.class_correct = train_eval.class_correct;
  return res;
}

}  // namespace commpool::classify
