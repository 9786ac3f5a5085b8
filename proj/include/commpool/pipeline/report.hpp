#pragma once

// Multi-repeat experiment runner and report emission.
//
// Output files are a pure function of (config, master seed): no timestamps,
// no host names, and repeat rows in repeat order regardless of worker count.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "commpool/graphio/tu_format.hpp"
#include "commpool/pipeline/pipeline.hpp"

#ifndef COMMPOOL_VERSION
#define COMMPOOL_VERSION "0.0.0"
#endif

namespace commpool::pipeline {

inline constexpr std::size_t kNmiBins = 10;
inline constexpr double kNmiHighThreshold = 0.9;

struct RepeatRow {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  double test_accuracy = 0.0;
  double val_accuracy = 0.0;
  std::size_t best_val_epoch = 0;
  std::vector<double> nmi;
  std::vector<std::size_t> vgae_best_epochs;
  std::vector<double> mean_nodes_after_module;
  std::vector<std::string> log;
};

struct Aggregate {
  std::size_t completed = 0;
  std::size_t failed = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::optional<double> mean_nmi;
  std::optional<double> std_nmi;
  std::optional<double> frac_nmi_above;  // fraction of graphs with NMI > 0.9
  std::vector<std::size_t> nmi_histogram;
  std::vector<std::string> warnings;

  bool operator==(const Aggregate&) const = default;
};

struct DatasetInfo {
  std::string name;
  std::size_t graphs = 0;
  std::size_t classes = 0;
  std::string feature_source;
  double mean_nodes = 0.0;
  double mean_edges = 0.0;
  bool has_communities = false;
};

struct ExperimentReport {
  std::string version = COMMPOOL_VERSION;
  json config;
  DatasetInfo dataset;
  std::vector<RepeatRow> repeats;
  Aggregate aggregate;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace detail

// Bin b covers [b/10, (b+1)/10); the last bin includes 1.0.
inline std::size_t nmi_bin(double v) {
  const auto b = static_cast<std::size_t>(std::floor(std::clamp(v, 0.0, 1.0) * kNmiBins));
  return std::min(b, kNmiBins - 1);
}

// Mean ± population std of accuracy over completed repeats, and NMI
// statistics over every (repeat, graph) value.
inline Aggregate aggregate(const std::vector<RepeatRow>& rows) {
  Aggregate a;
  std::vector<double> acc, nmi;
  for (const auto& r : rows) {
    if (!r.ok) {
      ++a.failed;
      continue;
    }
    ++a.completed;
    acc.push_back(r.test_accuracy);
    nmi.insert(nmi.end(), r.nmi.begin(), r.nmi.end());
  }
  std::tie(a.mean_accuracy, a.std_accuracy) = detail::mean_std(acc);
  a.nmi_histogram.assign(kNmiBins, 0);
  if (!nmi.empty()) {
    auto [m, s] = detail::mean_std(nmi);
    a.mean_nmi = m;
    a.std_nmi = s;
    std::size_t high = 0;
    for (double v : nmi) {
      high += v > kNmiHighThreshold ? 1 : 0;
      ++a.nmi_histogram[nmi_bin(v)];
    }
    a.frac_nmi_above = static_cast<double>(high) / static_cast<double>(nmi.size());
  }
  if (rows.empty()) a.warnings.push_back("no repeats were run");
  if (a.failed > 0)
    a.warnings.push_back(std::to_string(a.failed) + " repeat(s) failed; statistics cover completed repeats only");
  return a;
}

inline DatasetInfo describe(const Dataset& ds) {
  return {ds.name, ds.size(), ds.class_count, graphio::to_string(ds.feature_source), ds.mean_node_count(),
          ds.mean_edge_count(), ds.has_communities()};
}

inline Dataset load_dataset(const PipelineConfig& cfg) {
  if (cfg.dataset.source == SourceKind::tu)
    return graphio::parse_tu_dataset(cfg.dataset.tu_directory, cfg.dataset.tu_name);
  return synthgen::build_simulation_dataset(cfg.dataset.seed.value_or(cfg.seed), cfg.dataset.synthetic);
}

inline std::uint64_t repeat_seed(std::uint64_t master, std::size_t repeat) { return derive_seed(master, {0x5eed, repeat}); }

inline RepeatRow to_row(std::size_t index, const PipelineResult& r) {
  RepeatRow row;
  row.index = index;
  row.seed = r.seed;
  row.test_accuracy = r.test_accuracy;
  row.val_accuracy = r.val_accuracy;
  row.best_val_epoch = r.train_report.best_epoch;
  row.nmi = r.nmi;
  for (const auto& m : r.modules) {
    row.vgae_best_epochs.push_back(m.vgae_best_epoch);
    row.mean_nodes_after_module.push_back(m.mean_nodes_out);
  }
  row.log = r.log;
  return row;
}

// `repeats` independent pipelines on derived seeds. Failures are recorded
// per row and excluded from the aggregate.
inline ExperimentReport run_experiment(const PipelineConfig& cfg, const Dataset& ds, std::size_t workers = 1) {
  cfg.validate();
  ExperimentReport rep;
  rep.config = to_json(cfg);
  rep.dataset = describe(ds);
  rep.repeats.resize(cfg.repeats);
  parallel_for(cfg.repeats, workers, [&](std::size_t r) {
    const std::uint64_t seed = repeat_seed(cfg.seed, r);
    try {
      rep.repeats[r] = to_row(r, run_pipeline(ds, cfg, seed));
    } catch (const std::exception& e) {
      RepeatRow row;
      row.index = r;
      row.seed = seed;
      row.ok = false;
      row.error = e.what();
      rep.repeats[r] = std::move(row);
    }
  });
  rep.aggregate = aggregate(rep.repeats);
  return rep;
}

inline ExperimentReport run_experiment(const PipelineConfig& cfg, std::size_t workers = 1) {
  return run_experiment(cfg, load_dataset(cfg), workers);
}

// --- serialization ------------------------------------------------------------

inline json to_json(const RepeatRow& r) {
  return {{"index", r.index},
          {"seed", r.seed},
          {"ok", r.ok},
          {"error", r.error},
          {"test_accuracy", r.test_accuracy},
          {"val_accuracy", r.val_accuracy},
          {"best_val_epoch", r.best_val_epoch},
          {"nmi", r.nmi},
          {"vgae_best_epochs", r.vgae_best_epochs},
          {"mean_nodes_after_module", r.mean_nodes_after_module},
          {"log", r.log}};
}

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const Aggregate& a) {
  return {{"completed", a.completed},       {"failed", a.failed},         {"mean_accuracy", a.mean_accuracy},
          {"std_accuracy", a.std_accuracy}, {"mean_nmi", opt(a.mean_nmi)}, {"std_nmi", opt(a.std_nmi)},
          {"frac_nmi_above_0_9", opt(a.frac_nmi_above)}, {"nmi_histogram", a.nmi_histogram},
          {"warnings", a.warnings}};
}

inline json to_json(const ExperimentReport& r) {
  json rows = json::array();
  for (const auto& row : r.repeats) rows.push_back(to_json(row));
  return {{"software_version", r.version},
          {"dataset",
           {{"name", r.dataset.name},
            {"graphs", r.dataset.graphs},
            {"classes", r.dataset.classes},
            {"feature_source", r.dataset.feature_source},
            {"mean_nodes", r.dataset.mean_nodes},
            {"mean_edges", r.dataset.mean_edges},
            {"has_communities", r.dataset.has_communities}}},
          {"config", r.config},
          {"repeats", rows},
          {"aggregate", to_json(r.aggregate)}};
}

// Parses report.json and re-derives the aggregate from the rows; a stored
// aggregate that disagrees is rejected.
inline ExperimentReport report_from_json(const json& j) {
  ExperimentReport r;
  try {
    r.version = j.at("software_version").get<std::string>();
    const json& d = j.at("dataset");
    r.dataset = {d.at("name").get<std::string>(),    d.at("graphs").get<std::size_t>(),
                 d.at("classes").get<std::size_t>(), d.at("feature_source").get<std::string>(),
                 d.at("mean_nodes").get<double>(),   d.at("mean_edges").get<double>(),
                 d.at("has_communities").get<bool>()};
    r.config = j.at("config");
    for (const json& row : j.at("repeats")) {
      RepeatRow x;
      x.index = row.at("index").get<std::size_t>();
      x.seed = row.at("seed").get<std::uint64_t>();
      x.ok = row.at("ok").get<bool>();
      x.error = row.at("error").get<std::string>();
      x.test_accuracy = row.at("test_accuracy").get<double>();
      x.val_accuracy = row.at("val_accuracy").get<double>();
      x.best_val_epoch = row.at("best_val_epoch").get<std::size_t>();
      x.nmi = row.at("nmi").get<std::vector<double>>();
      x.vgae_best_epochs = row.at("vgae_best_epochs").get<std::vector<std::size_t>>();
      x.mean_nodes_after_module = row.at("mean_nodes_after_module").get<std::vector<double>>();
      x.log = row.at("log").get<std::vector<std::string>>();
      r.repeats.push_back(std::move(x));
    }
  } catch (const json::exception& e) {
    throw ContractError(std::string("report.json: ") + e.what());
  }
  r.aggregate = aggregate(r.repeats);
  if (to_json(r.aggregate) != j.at("aggregate"))
    throw ContractError("report.json: stored aggregate does not match the per-repeat rows");
  return r;
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string render_summary(const ExperimentReport& r) {
  const Aggregate& a = r.aggregate;
  std::ostringstream s;
  s << "# CommPOOL experiment: " << r.dataset.name << "\n\n";
  s << "Average graph classification test accuracy ± standard deviation (%) over " << a.completed << " of "
    << r.repeats.size() << " repeats.\n\n";
  s << "| Model | " << r.dataset.name << " |\n|---|---|\n";
  std::string variant = "CommPOOL";
  if (r.config.contains("modules") && !r.config["modules"].empty()) {
    const json& m = r.config["modules"][0];
    variant += " (" + m.value("layer", std::string("gcn")) + ", " + m.value("similarity", std::string("")) + ", " +
               m.value("clustering", std::string("")) + ")";
  }
  s << "| " << variant << " | " << format_fixed(100.0 * a.mean_accuracy, 2) << " ± "
    << format_fixed(100.0 * a.std_accuracy, 2) << " |\n\n";
  if (a.mean_nmi) {
    s << "Community fidelity (first EP module): mean NMI " << format_fixed(*a.mean_nmi, 3) << " ± "
      << format_fixed(*a.std_nmi, 3) << "; " << format_fixed(100.0 * *a.frac_nmi_above, 2)
      << "% of graphs have NMI > 0.9.\n\n";
  }
  s << "Dataset: " << r.dataset.graphs << " graphs, " << r.dataset.classes << " classes, mean |V| "
    << format_fixed(r.dataset.mean_nodes, 2) << ", mean |E| " << format_fixed(r.dataset.mean_edges, 2)
    << ", node features from " << r.dataset.feature_source << ".\n";
  if (r.config.contains("dataset") && r.config["dataset"].value("source", std::string()) == "synthetic") {
    s << "\nSynthetic generator calibration (not reported by the original authors):\n\n";
    for (const json& c : r.config["dataset"]["classes"])
      s << "- " << c.at("generator").get<std::string>() << ": p_in " << c.at("p_in").dump() << ", p_out "
        << c.at("p_out").dump() << ", size_std " << c.at("size_std").dump() << "\n";
  }
  for (const auto& w : a.warnings) s << "\nWarning: " << w << "\n";
  return s.str();
}

inline std::string render_metrics_csv(const ExperimentReport& r) {
  std::ostringstream s;
  s << "seed,accuracy,mean_nmi\n";
  for (const auto& row : r.repeats) {
    if (!row.ok) continue;
    s << row.seed << ',' << graphio::detail::format_double(row.test_accuracy) << ',';
    if (!row.nmi.empty()) {
      double m = 0.0;
      for (double v : row.nmi) m += v;
      s << graphio::detail::format_double(m / static_cast<double>(row.nmi.size()));
    }
    s << '\n';
  }
  return s.str();
}

inline std::string render_nmi_hist_csv(const ExperimentReport& r) {
  std::ostringstream s;
  s << "bin_low,bin_high,count\n";
  for (std::size_t b = 0; b < kNmiBins; ++b)
    s << format_fixed(static_cast<double>(b) / kNmiBins, 1) << ',' << format_fixed(static_cast<double>(b + 1) / kNmiBins, 1)
      << ',' << r.aggregate.nmi_histogram[b] << '\n';
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IngestionError(p.string(), "cannot open for writing");
  out << content;
  if (!out) throw IngestionError(p.string(), "write failed");
}

inline void emit_report(const ExperimentReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IngestionError(dir.string(), "cannot create directory: " + ec.message());
  write_file(dir / "report.json", to_json(r).dump(2) + "\n");
  write_file(dir / "metrics.csv", render_metrics_csv(r));
  write_file(dir / "summary.md", render_summary(r));
  write_file(dir / "nmi_hist.csv", render_nmi_hist_csv(r));
}

}  // namespace commpool::pipeline
