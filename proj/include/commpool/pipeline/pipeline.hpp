#pragma once

// The end-to-end training procedure for one random split: K stacked
// Embedding-Pooling modules, mean readout, and the MLP head.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "commpool/classify/mlp.hpp"
#include "commpool/graphio/split.hpp"
#include "commpool/pipeline/config.hpp"
#include "commpool/pipeline/parallel.hpp"
#include "commpool/synthgen/nmi.hpp"

namespace commpool::pipeline {

using graphio::Dataset;
using graphio::Graph;

enum class Stage { train_classifier, validate_classifier, evaluate };

// Graph labels are handed out only through this object, so which split's
// labels are read, and when, is observable. Test labels are requested only
// by the final evaluation.
class LabelAccess {
 public:
  using Observer = std::function<void(std::size_t graph, Stage stage)>;

  explicit LabelAccess(const Dataset& ds, Observer observer = {}) : ds_(ds), observer_(std::move(observer)) {}

  int label(std::size_t graph, Stage stage) const {
    if (observer_) observer_(graph, stage);
    const auto& l = ds_.graphs.at(graph).label;
    if (!l) throw ContractError("graph " + std::to_string(graph) + " has no label");
    return *l;
  }

 private:
  const Dataset& ds_;
  Observer observer_;
};

class StageError : public Error {
 public:
  StageError(std::string stage_name, std::uint64_t run_seed, const std::string& what)
      : Error("stage '" + stage_name + "' (seed " + std::to_string(run_seed) + "): " + what),
        stage(std::move(stage_name)),
        seed(run_seed) {}
  std::string stage;
  std::uint64_t seed;
};

struct EpModuleState {
  std::vector<encoder::VgaeParams> vgae;  // one shared model, or one per graph in per-graph mode
  std::size_t vgae_best_epoch = 0;
  double vgae_best_objective = 0.0;
  double mean_nodes_in = 0.0;
  double mean_nodes_out = 0.0;
};

struct PipelineResult {
  std::uint64_t seed = 0;
  graphio::Split split;
  std::vector<EpModuleState> modules;
  classify::MlpParams classifier;
  classify::ClassifierReport train_report;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  classify::ClassifierReport test_report;
  std::vector<double> nmi;                    // first-module NMI per graph, when ground truth exists
  std::vector<std::size_t> pooled_node_counts;  // final node count per graph
  std::vector<std::string> log;
};

// Sub-seed streams; numbers are part of the reproducibility contract.
enum SeedStream : std::uint64_t { kSplitStream = 1, kVgaeStream = 2, kPoolStream = 3, kMlpStream = 4, kGraphVgaeStream = 5 };

namespace detail {

inline std::vector<const Graph*> pick(const std::vector<Graph>& graphs, const std::vector<std::size_t>& idx) {
  std::vector<const Graph*> out;
  for (std::size_t i : idx) out.push_back(&graphs[i]);
  return out;
}

inline diffnum::Matrix rows_of(const diffnum::Matrix& all, const std::vector<std::size_t>& idx) {
  diffnum::Matrix out(idx.size(), all.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(all.row_span(idx[r]).begin(), all.cols(), out.row_span(r).begin());
  return out;
}

// z-scores columns in place with the given rows' mean and population std.
inline void standardize(diffnum::Matrix& x, const std::vector<std::size_t>& fit_rows) {
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t r : fit_rows) mean += x(r, c);
    mean /= static_cast<double>(fit_rows.size());
    for (std::size_t r : fit_rows) var += (x(r, c) - mean) * (x(r, c) - mean);
    const double sd = std::sqrt(var / static_cast<double>(fit_rows.size()));
    for (std::size_t r = 0; r < x.rows(); ++r) x(r, c) = sd > 1e-12 ? (x(r, c) - mean) / sd : x(r, c) - mean;
  }
}

}  // namespace detail

struct RunOptions {
  std::size_t workers = 1;
  LabelAccess::Observer label_observer;
};

inline PipelineResult run_pipeline(const Dataset& ds, const PipelineConfig& cfg, std::uint64_t seed,
                                   const RunOptions& opts = {}) {
  cfg.validate();
  PipelineResult res;
  res.seed = seed;
  std::string stage = "split";
  try {
    res.split = graphio::split_dataset(ds.size(), derive_seed(seed, {kSplitStream}));
    const auto& split = res.split;

    // Labels are stripped; they come back only through LabelAccess.
    std::vector<Graph> current = ds.graphs;
    for (auto& g : current) g.label.reset();

    const bool record_nmi = ds.has_communities();
    for (std::size_t k = 0; k < cfg.modules.size(); ++k) {
      const ModuleConfig& mc = cfg.modules[k];
      EpModuleState state;
      for (const auto& g : current) state.mean_nodes_in += static_cast<double>(g.node_count());
      state.mean_nodes_in /= static_cast<double>(current.size());

      stage = "ep" + std::to_string(k + 1) + ".vgae";
      std::vector<Graph> next(current.size());
      std::vector<std::vector<std::size_t>> membership(current.size());
      if (mc.vgae.sharing == encoder::Sharing::shared) {
        Rng rng(derive_seed(seed, {kVgaeStream, k}));
        auto trained = encoder::train_vgae(detail::pick(current, split.train), detail::pick(current, split.val),
                                           mc.vgae, rng);
        state.vgae_best_epoch = trained.best_epoch;
        state.vgae_best_objective = trained.val_curve.empty() ? 0.0 : trained.val_curve[trained.best_epoch];
        if (trained.degenerate_graphs > 0)
          res.log.push_back(stage + ": " + std::to_string(trained.degenerate_graphs) +
                            " training graphs without edges or non-edges");
        state.vgae.push_back(std::move(trained.params));
      } else {
        state.vgae.resize(current.size());
        parallel_for(current.size(), opts.workers, [&](std::size_t i) {
          Rng rng(derive_seed(seed, {kGraphVgaeStream, k, i}));
          const Graph* g = &current[i];
          state.vgae[i] = encoder::train_vgae(std::span(&g, 1), {}, mc.vgae, rng).params;
        });
      }

      stage = "ep" + std::to_string(k + 1) + ".pool";
      parallel_for(current.size(), opts.workers, [&](std::size_t i) {
        Rng rng(derive_seed(seed, {kPoolStream, k, i}));
        const auto& params = state.vgae.size() == 1 ? state.vgae.front() : state.vgae[i];
        auto out = pooling::ep_module_apply(current[i], params, mc.pool, rng);
        membership[i] = std::move(out.assignment.membership);
        next[i] = std::move(out.pooled.graph);
      });
      if (k == 0 && record_nmi) {
        for (std::size_t i = 0; i < current.size(); ++i) {
          std::vector<int> pred(membership[i].begin(), membership[i].end());
          res.nmi.push_back(synthgen::nmi(pred, *current[i].communities));
        }
      }
      for (const auto& g : next) state.mean_nodes_out += static_cast<double>(g.node_count());
      state.mean_nodes_out /= static_cast<double>(next.size());
      current = std::move(next);
      res.modules.push_back(std::move(state));
    }
    for (const auto& g : current) res.pooled_node_counts.push_back(g.node_count());

    stage = "readout";
    diffnum::Matrix x(current.size(), current.front().feature_dim());
    for (std::size_t i = 0; i < current.size(); ++i) {
      const auto z = classify::global_readout(current[i].features);
      std::copy(z.begin(), z.end(), x.row_span(i).begin());
    }
    if (cfg.standardize) detail::standardize(x, split.train);

    stage = "classifier";
    const LabelAccess labels(ds, opts.label_observer);
    std::vector<int> ytrain, yval;
    for (std::size_t i : split.train) ytrain.push_back(labels.label(i, Stage::train_classifier));
    for (std::size_t i : split.val) yval.push_back(labels.label(i, Stage::validate_classifier));
    const auto xtrain = detail::rows_of(x, split.train);
    const auto xval = detail::rows_of(x, split.val);
    Rng mlp_rng(derive_seed(seed, {kMlpStream}));
    auto trained = classify::train_classifier(xtrain, ytrain, xval, yval, ds.class_count, cfg.classifier, mlp_rng);
    res.classifier = std::move(trained.params);
    res.train_report = std::move(trained.report);
    res.val_accuracy = classify::evaluate(xval, yval, res.classifier).accuracy;

    stage = "evaluate";
    std::vector<int> ytest;
    for (std::size_t i : split.test) ytest.push_back(labels.label(i, Stage::evaluate));
    res.test_report = classify::evaluate(detail::rows_of(x, split.test), ytest, res.classifier);
    res.test_accuracy = res.test_report.accuracy;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, seed, e.what());
  }
  return res;
}

}  // namespace commpool::pipeline
