#pragma once

// Opt-in hyperparameter search over the standard grids. The search is a
// single axis-wise sweep: each axis is tuned in turn with the others held at
// their current best, scored by mean validation accuracy over the repeats.

#include <string>
#include <vector>

#include "commpool/pipeline/report.hpp"

namespace commpool::pipeline {

struct GridAxis {
  std::string key;  // dotted config path, as accepted by apply_override
  std::vector<double> values;
};

struct GridTrial {
  std::string key;
  double value = 0.0;
  double mean_val_accuracy = 0.0;
  std::size_t failed = 0;
};

struct GridResult {
  PipelineConfig best;
  std::vector<GridTrial> trials;
};

inline std::vector<GridAxis> grid_axes(const PipelineConfig& cfg, const SearchGrid& grid = {}) {
  std::vector<GridAxis> axes;
  for (std::size_t k = 0; k < cfg.modules.size(); ++k) {
    const auto& rates = k == 0 ? grid.first_module_rates : grid.later_module_rates;
    const std::string m = "modules." + std::to_string(k) + ".";
    axes.push_back({m + "learning_rate", rates});
    axes.push_back({m + "weight_decay", rates});
    axes.push_back({m + "ratio", grid.ratios});
  }
  axes.push_back({"classifier.learning_rate", grid.classifier_rates});
  return axes;
}

inline double mean_val_accuracy(const PipelineConfig& cfg, const Dataset& ds, std::size_t workers,
                                std::size_t& failed) {
  std::vector<double> acc(cfg.repeats, 0.0);
  std::vector<char> ok(cfg.repeats, 0);
  parallel_for(cfg.repeats, workers, [&](std::size_t r) {
    try {
      acc[r] = run_pipeline(ds, cfg, repeat_seed(cfg.seed, r)).val_accuracy;
      ok[r] = 1;
    } catch (const std::exception&) {
    }
  });
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < cfg.repeats; ++r)
    if (ok[r]) {
      s += acc[r];
      ++n;
    }
  failed = cfg.repeats - n;
  return n == 0 ? -1.0 : s / static_cast<double>(n);
}

// Ties go to the earlier grid value.
inline GridResult grid_search(const PipelineConfig& base, const Dataset& ds, std::size_t workers = 1,
                              const SearchGrid& grid = {}) {
  GridResult res;
  res.best = base;
  for (const GridAxis& axis : grid_axes(base, grid)) {
    PipelineConfig axis_best = res.best;
    double best_score = -2.0;
    for (double v : axis.values) {
      json j = to_json(res.best);
      apply_override(j, axis.key + "=" + json(v).dump());
      PipelineConfig trial = config_from_json(j);
      GridTrial t{axis.key, v, 0.0, 0};
      t.mean_val_accuracy = mean_val_accuracy(trial, ds, workers, t.failed);
      res.trials.push_back(t);
      if (t.mean_val_accuracy > best_score) {
        best_score = t.mean_val_accuracy;
        axis_best = std::move(trial);
      }
    }
    res.best = std::move(axis_best);
  }
  return res;
}

inline json to_json(const GridResult& g) {
  json trials = json::array();
  for (const auto& t : g.trials)
    trials.push_back({{"key", t.key}, {"value", t.value}, {"mean_val_accuracy", t.mean_val_accuracy}, {"failed", t.failed}});
  return {{"selected", to_json(g.best)}, {"trials", trials}};
}

}  // namespace commpool::pipeline
