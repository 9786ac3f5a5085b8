// commpool: command-line front end.
//
//   commpool run       [--config FILE] [--set key=value]... [--seed N] [--out DIR] [--grid] [--semi-random]
//   commpool synth     --out DIR [--config FILE] [--set key=value]... [--seed N]
//   commpool nmi       LABELS_A LABELS_B
//   commpool gradcheck
//   commpool parse     DIR NAME
//
// Exit status: 0 success, 1 usage error, 2 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commpool/pipeline/gradsuite.hpp"
#include "commpool/pipeline/grid.hpp"
#include "commpool/pipeline/report.hpp"

namespace cp = commpool;
namespace pl = commpool::pipeline;

namespace {

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_config_options(CLI::App* app, ConfigArgs& args) {
  app->add_option("--config", args.config_path, "JSON config file (defaults built in)")->check(CLI::ExistingFile);
  app->add_option("--set", args.overrides, "Override a config key, e.g. modules.0.ratio=0.4")->take_all();
  app->add_option("--seed", args.seed, "Master seed");
}

pl::PipelineConfig load_config(const ConfigArgs& args) {
  pl::json doc = pl::to_json(pl::default_config());
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    doc = pl::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw UsageError(args.config_path + ": not valid JSON");
  }
  try {
    for (const auto& o : args.overrides) pl::apply_override(doc, o);
    if (args.seed) doc["seed"] = *args.seed;
    return pl::config_from_json(doc);
  } catch (const cp::ContractError& e) {
    throw UsageError(e.what());
  }
}

std::vector<int> read_labels(const std::string& path) {
  std::vector<int> out;
  for (const auto& [line, text] : cp::graphio::detail::read_lines(path)) {
    const auto t = cp::graphio::detail::trim(text);
    if (t.empty()) continue;
    int v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) throw cp::ParseError(path, line, "expected an integer label");
    out.push_back(v);
  }
  return out;
}

int cmd_run(const ConfigArgs& args, const std::string& out_dir, bool grid, bool semi_random) {
  auto cfg = load_config(args);
  if (semi_random)
    for (auto& m : cfg.modules) m.pool.clustering = cp::pooling::Clustering::semi_random;
  const std::size_t workers = pl::default_workers();
  const auto ds = pl::load_dataset(cfg);
  if (grid) {
    const auto g = pl::grid_search(cfg, ds, workers);
    cfg = g.best;
    std::filesystem::create_directories(out_dir);
    pl::write_file(std::filesystem::path(out_dir) / "grid.json", pl::to_json(g).dump(2) + "\n");
  }
  const auto report = pl::run_experiment(cfg, ds, workers);
  pl::emit_report(report, out_dir);
  std::cout << pl::render_summary(report);
  for (const auto& row : report.repeats)
    if (!row.ok) std::cerr << "repeat " << row.index << " failed: " << row.error << "\n";
  return report.aggregate.completed == 0 ? kRuntime : 0;
}

int cmd_synth(const ConfigArgs& args, const std::string& out_dir) {
  auto cfg = load_config(args);
  cfg.dataset.source = pl::SourceKind::synthetic;
  const auto ds = pl::load_dataset(cfg);
  cp::graphio::write_tu_dataset(ds, out_dir, ds.name);
  std::cout << "wrote " << ds.size() << " graphs to " << out_dir << "/" << ds.name << "_*.txt\n";
  return 0;
}

int cmd_nmi(const std::string& a, const std::string& b) {
  const auto la = read_labels(a);
  const auto lb = read_labels(b);
  if (la.size() != lb.size())
    throw UsageError("label files differ in length: " + std::to_string(la.size()) + " vs " + std::to_string(lb.size()));
  std::printf("%.6f\n", cp::synthgen::nmi(la, lb));
  return 0;
}

int cmd_gradcheck() {
  bool ok = true;
  for (const auto& c : pl::run_grad_suite()) {
    std::printf("%-28s rel-err %.3e  tol %.0e  %s\n", c.name.c_str(), c.max_relative_error, c.tolerance,
                c.passed() ? "ok" : "FAIL");
    ok = ok && c.passed();
  }
  return ok ? 0 : kRuntime;
}

int cmd_parse(const std::string& dir, const std::string& name) {
  const auto ds = cp::graphio::parse_tu_dataset(dir, name);
  std::printf("dataset         %s\n", ds.name.c_str());
  std::printf("graphs          %zu\n", ds.size());
  std::printf("classes         %zu\n", ds.class_count);
  std::printf("mean nodes      %.2f\n", ds.mean_node_count());
  std::printf("mean edges      %.2f\n", ds.mean_edge_count());
  std::printf("feature source  %s (dim %zu)\n", cp::graphio::to_string(ds.feature_source), ds.feature_dim);
  std::printf("communities     %s\n", ds.has_communities() ? "yes" : "no");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CommPOOL: community-based hierarchical graph pooling"};
  app.set_version_flag("--version", std::string(COMMPOOL_VERSION));
  app.require_subcommand(1);

  ConfigArgs run_args, synth_args;
  std::string run_out = "commpool-out", synth_out;
  bool grid = false, semi_random = false;
  auto* run = app.add_subcommand("run", "Run the repeated train/evaluate experiment and write reports");
  add_config_options(run, run_args);
  run->add_option("--out", run_out, "Report directory");
  run->add_flag("--grid", grid, "Axis-wise search over the hyperparameter grids before the final run");
  run->add_flag("--semi-random", semi_random, "Random medoid selection in every module (ablation)");

  auto* synth = app.add_subcommand("synth", "Write the simulation dataset in TU format");
  add_config_options(synth, synth_args);
  synth->add_option("--out", synth_out, "Output directory")->required();

  std::string nmi_a, nmi_b;
  auto* nmi = app.add_subcommand("nmi", "NMI between two label files (one integer per line)");
  nmi->add_option("labels_a", nmi_a)->required()->check(CLI::ExistingFile);
  nmi->add_option("labels_b", nmi_b)->required()->check(CLI::ExistingFile);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable block");

  std::string parse_dir, parse_name;
  auto* parse = app.add_subcommand("parse", "Validate a TU dataset directory and print statistics");
  parse->add_option("dir", parse_dir)->required()->check(CLI::ExistingDirectory);
  parse->add_option("name", parse_name)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*run) return cmd_run(run_args, run_out, grid, semi_random);
    if (*synth) return cmd_synth(synth_args, synth_out);
    if (*nmi) return cmd_nmi(nmi_a, nmi_b);
    if (*gradcheck) return cmd_gradcheck();
    if (*parse) return cmd_parse(parse_dir, parse_name);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
