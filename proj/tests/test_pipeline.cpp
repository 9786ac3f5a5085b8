#include <gtest/gtest.h>

#include <cstdlib>
#include <set>
#include <sstream>

#include "commpool/pipeline/gradsuite.hpp"
#include "commpool/pipeline/grid.hpp"
#include "commpool/pipeline/pipeline.hpp"
#include "commpool/pipeline/report.hpp"
#include "test_util.hpp"

using namespace commpool;
using namespace commpool::pipeline;
using testutil::read_text;
using testutil::TempDir;
using testutil::write_text;

namespace {

PipelineConfig small_config(std::size_t modules = 2) {
  PipelineConfig c = default_config();
  c.modules.resize(modules, c.modules.front());
  for (auto& m : c.modules) m.vgae.max_epochs = 10;
  c.classifier.max_epochs = 30;
  c.dataset.synthetic.graphs_per_class = 4;
  c.repeats = 3;
  return c;
}

graphio::Dataset small_dataset(std::size_t per_class = 4, std::uint64_t seed = 0) {
  synthgen::SimulationSpec spec;
  spec.graphs_per_class = per_class;
  return synthgen::build_simulation_dataset(seed, spec);
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" COMMPOOL_CLI_PATH "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(RunPipeline, SingleModuleOnThreeGraphs) {
  const auto ds = small_dataset(1);
  const auto res = run_pipeline(ds, small_config(1), 5);
  ASSERT_EQ(res.pooled_node_counts.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(res.pooled_node_counts[i], ds.graphs[i].node_count());
  EXPECT_GE(res.test_accuracy, 0.0);
  EXPECT_LE(res.test_accuracy, 1.0);
  EXPECT_EQ(res.nmi.size(), 3u);
}

TEST(RunPipeline, NodeCountsShrinkPerModule) {
  const auto res = run_pipeline(small_dataset(), small_config(2), 1);
  ASSERT_EQ(res.modules.size(), 2u);
  EXPECT_LT(res.modules[0].mean_nodes_out, res.modules[0].mean_nodes_in);
  EXPECT_LT(res.modules[1].mean_nodes_out, res.modules[1].mean_nodes_in);
  EXPECT_EQ(res.modules[1].mean_nodes_in, res.modules[0].mean_nodes_out);
}

TEST(RunPipeline, TestLabelsReadOnlyByFinalEvaluation) {
  const auto ds = small_dataset();
  std::vector<std::pair<std::size_t, Stage>> log;
  RunOptions opts;
  opts.label_observer = [&](std::size_t g, Stage s) { log.emplace_back(g, s); };
  const auto res = run_pipeline(ds, small_config(), 3, opts);
  const std::set<std::size_t> test(res.split.test.begin(), res.split.test.end());
  const std::set<std::size_t> train(res.split.train.begin(), res.split.train.end());
  const std::set<std::size_t> val(res.split.val.begin(), res.split.val.end());
  ASSERT_FALSE(log.empty());
  bool evaluating = false;
  for (const auto& [g, s] : log) {
    if (s == Stage::evaluate) {
      evaluating = true;
      EXPECT_TRUE(test.count(g)) << g;
    } else {
      EXPECT_FALSE(evaluating) << "label read after evaluation began";
      EXPECT_FALSE(test.count(g)) << g;
      EXPECT_TRUE(s == Stage::train_classifier ? train.count(g) : val.count(g)) << g;
    }
  }
  EXPECT_TRUE(evaluating);
}

TEST(RunPipeline, DeterministicAcrossRuns) {
  const auto ds = small_dataset();
  const auto a = run_pipeline(ds, small_config(), 9);
  const auto b = run_pipeline(ds, small_config(), 9);
  EXPECT_EQ(a.test_accuracy, b.test_accuracy);
  EXPECT_EQ(a.nmi, b.nmi);
  EXPECT_EQ(a.train_report.loss_curve, b.train_report.loss_curve);
}

TEST(RunPipeline, WorkerCountDoesNotChangeResults) {
  const auto ds = small_dataset();
  RunOptions one, three;
  three.workers = 3;
  const auto a = run_pipeline(ds, small_config(), 4, one);
  const auto b = run_pipeline(ds, small_config(), 4, three);
  EXPECT_EQ(a.test_accuracy, b.test_accuracy);
  EXPECT_EQ(a.nmi, b.nmi);
  EXPECT_EQ(a.classifier.w1.value, b.classifier.w1.value);
}

TEST(RunPipeline, FailureNamesStageAndSeed) {
  auto ds = small_dataset();
  ds.graphs[2].features = diffnum::Matrix(ds.graphs[2].node_count(), ds.feature_dim + 1);
  try {
    run_pipeline(ds, small_config(), 77);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage, "ep1.vgae");
    EXPECT_EQ(e.seed, 77u);
  }
}

TEST(RunExperiment, SingleRepeatHasZeroSpread) {
  auto cfg = small_config(1);
  cfg.repeats = 1;
  const auto rep = run_experiment(cfg, small_dataset());
  EXPECT_EQ(rep.aggregate.completed, 1u);
  EXPECT_EQ(rep.aggregate.std_accuracy, 0.0);
}

TEST(RunExperiment, ReportsAreByteIdentical) {
  auto cfg = small_config(1);
  const auto ds = small_dataset();
  const auto a = run_experiment(cfg, ds, 1);
  const auto b = run_experiment(cfg, ds, 3);
  EXPECT_EQ(to_json(a).dump(2), to_json(b).dump(2));
  EXPECT_EQ(render_summary(a), render_summary(b));
}

TEST(RunExperiment, FailedRepeatsAreRecordedNotFatal) {
  auto ds = small_dataset();
  ds.graphs[0].features = diffnum::Matrix(ds.graphs[0].node_count(), ds.feature_dim + 2);
  const auto rep = run_experiment(small_config(1), ds);
  EXPECT_EQ(rep.aggregate.completed, 0u);
  EXPECT_EQ(rep.aggregate.failed, 3u);
  for (const auto& r : rep.repeats) {
    EXPECT_FALSE(r.ok);
    EXPECT_NE(r.error.find("ep1.vgae"), std::string::npos);
  }
  EXPECT_FALSE(rep.aggregate.warnings.empty());
}

TEST(Report, EmitWritesAllFiles) {
  auto cfg = small_config(1);
  cfg.repeats = 10;
  const auto rep = run_experiment(cfg, small_dataset());
  TempDir dir("report");
  emit_report(rep, dir.path());
  for (const char* f : {"report.json", "metrics.csv", "summary.md", "nmi_hist.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::istringstream csv(read_text(dir / "metrics.csv"));
  std::string line;
  std::size_t lines = 0;
  std::getline(csv, line);
  EXPECT_EQ(line, "seed,accuracy,mean_nmi");
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 10u);
  std::istringstream hist(read_text(dir / "nmi_hist.csv"));
  lines = 0;
  while (std::getline(hist, line)) ++lines;
  EXPECT_EQ(lines, 1u + kNmiBins);
  EXPECT_NE(read_text(dir / "summary.md").find("| Model |"), std::string::npos);
}

TEST(Report, EmptyRepeatListStillValid) {
  ExperimentReport rep;
  rep.config = to_json(default_config());
  rep.aggregate = aggregate(rep.repeats);
  ASSERT_FALSE(rep.aggregate.warnings.empty());
  EXPECT_FALSE(rep.aggregate.mean_nmi.has_value());
  TempDir dir("empty");
  emit_report(rep, dir.path());
  const auto back = report_from_json(json::parse(read_text(dir / "report.json")));
  EXPECT_EQ(back.aggregate, rep.aggregate);
  EXPECT_NE(read_text(dir / "summary.md").find("no repeats were run"), std::string::npos);
}

TEST(Report, RoundTripReaggregates) {
  const auto rep = run_experiment(small_config(1), small_dataset());
  const auto back = report_from_json(json::parse(to_json(rep).dump()));
  EXPECT_EQ(back.aggregate, rep.aggregate);
  EXPECT_EQ(render_summary(back), render_summary(rep));
  EXPECT_EQ(render_metrics_csv(back), render_metrics_csv(rep));
}

TEST(Report, TamperedAggregateRejected) {
  const auto rep = run_experiment(small_config(1), small_dataset());
  json j = to_json(rep);
  j["aggregate"]["mean_accuracy"] = 2.0;
  EXPECT_THROW(report_from_json(j), ContractError);
}

TEST(Report, AggregateStatistics) {
  std::vector<RepeatRow> rows(4);
  const double acc[] = {0.5, 0.7, 0.9, 0.0};
  for (std::size_t i = 0; i < 4; ++i) {
    rows[i].index = i;
    rows[i].test_accuracy = acc[i];
    rows[i].nmi = {1.0, 0.5};
  }
  rows[3].ok = false;
  const auto a = aggregate(rows);
  EXPECT_EQ(a.completed, 3u);
  EXPECT_EQ(a.failed, 1u);
  EXPECT_NEAR(a.mean_accuracy, 0.7, 1e-15);
  EXPECT_NEAR(a.std_accuracy, std::sqrt(0.08 / 3.0), 1e-15);
  ASSERT_TRUE(a.mean_nmi.has_value());
  EXPECT_DOUBLE_EQ(*a.mean_nmi, 0.75);
  EXPECT_DOUBLE_EQ(*a.frac_nmi_above, 0.5);
  EXPECT_EQ(a.nmi_histogram[kNmiBins - 1], 3u);
  EXPECT_EQ(a.nmi_histogram[5], 3u);
}

TEST(Config, JsonRoundTrip) {
  auto c = default_config();
  c.modules[1].pool.similarity = pooling::SimilarityKind::cosine;
  c.modules[0].pool.community_count = 5;
  c.dataset.seed = 11;
  c.seed = 3;
  const json j = to_json(c);
  EXPECT_EQ(to_json(config_from_json(j)), j);
}

TEST(Config, Overrides) {
  json j = to_json(default_config());
  apply_override(j, "modules.0.ratio=0.4");
  apply_override(j, "modules.1.similarity=cosine");
  apply_override(j, "repeats=2");
  const auto c = config_from_json(j);
  EXPECT_EQ(c.modules[0].pool.ratio, 0.4);
  EXPECT_EQ(c.modules[1].pool.similarity, pooling::SimilarityKind::cosine);
  EXPECT_EQ(c.repeats, 2u);
}

TEST(Config, RejectsBadInput) {
  json j = to_json(default_config());
  EXPECT_THROW(apply_override(j, "noequals"), ContractError);
  EXPECT_THROW(apply_override(j, "modules.x.ratio=0.4"), ContractError);
  EXPECT_THROW(config_from_json(json{{"bogus", 1}}), ContractError);
  EXPECT_THROW(config_from_json(json{{"modules", json::array()}}), ContractError);
  EXPECT_THROW(config_from_json(json{{"repeats", 0}}), ContractError);
  EXPECT_THROW(config_from_json(json{{"modules", {{{"ratio", 1.5}}}}}), ContractError);
  EXPECT_THROW(config_from_json(json{{"modules", {{{"similarity", "dot"}}}}}), ContractError);
}

TEST(GradSuite, AllCasesPass) {
  for (const auto& c : run_grad_suite()) EXPECT_TRUE(c.passed()) << c.name << " " << c.max_relative_error;
}

TEST(Grid, AxesFollowModuleOrder) {
  const auto axes = grid_axes(default_config());
  ASSERT_EQ(axes.size(), 7u);
  EXPECT_EQ(axes.front().key, "modules.0.learning_rate");
  EXPECT_EQ(axes.front().values.size(), 6u);
  EXPECT_EQ(axes[3].key, "modules.1.learning_rate");
  EXPECT_EQ(axes[3].values.size(), 4u);
  EXPECT_EQ(axes.back().key, "classifier.learning_rate");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli("gradcheck"), 0);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("run --set repeats=0 --out /dev/null/x"), 1);
  EXPECT_EQ(run_cli("run --set nosuchkey=1"), 1);
  EXPECT_EQ(run_cli("parse /nonexistent-dir TOY"), 1);
  TempDir dir("cli");
  EXPECT_EQ(run_cli("parse \"" + dir.path().string() + "\" TOY"), 2);
}

TEST(Cli, NmiAndParse) {
  TempDir dir("cli");
  write_text(dir / "a.txt", "0\n0\n1\n1\n");
  write_text(dir / "b.txt", "5\n5\n3\n3\n");
  const std::string out = (dir / "out.txt").string();
  const std::string cmd = "\"" COMMPOOL_CLI_PATH "\" nmi \"" + (dir / "a.txt").string() + "\" \"" +
                          (dir / "b.txt").string() + "\" > \"" + out + "\"";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(read_text(out), "1.000000\n");

  EXPECT_EQ(run_cli("synth --set dataset.graphs_per_class=2 --out \"" + (dir / "sim").string() + "\""), 0);
  EXPECT_EQ(run_cli("parse \"" + (dir / "sim").string() + "\" SIMULATION"), 0);
}

TEST(Cli, RunIsDeterministicAcrossWorkerCounts) {
  TempDir dir("cli");
  const std::string common =
      "run --seed 2 --set dataset.graphs_per_class=4 repeats=2 modules.0.max_epochs=5 modules.1.max_epochs=5 "
      "classifier.max_epochs=20 --out ";
  ASSERT_EQ(run_cli(common + "\"" + (dir / "w1").string() + "\"", "COMMPOOL_WORKERS=1"), 0);
  ASSERT_EQ(run_cli(common + "\"" + (dir / "w2").string() + "\"", "COMMPOOL_WORKERS=2"), 0);
  for (const char* f : {"report.json", "metrics.csv", "summary.md", "nmi_hist.csv"}) {
    const auto a = read_text(dir / "w1" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, read_text(dir / "w2" / f)) << f;
  }
}
