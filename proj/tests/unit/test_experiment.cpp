#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "leea/config.hpp"
#include "leea/errors.hpp"
#include "leea/experiment.hpp"
#include "leea/parallel.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class ExperimentRun : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("leea_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override {
    leea::set_worker_count(0);
    fs::remove_all(root_);
  }
  fs::path root_;
};

leea::ExperimentConfig quick_smoke() {
  auto cfg = leea::preset("smoke");
  cfg.evo.generations = 20;
  cfg.validation_every = 10;
  return cfg;
}

TEST(MetricsCsv, RoundTrip) {
  std::vector<leea::MetricRecord> rows = {{0, 7, 0, -0.25, 0.5, 0.01, 0.0, 3.0},
                                          {0, 7, 10, -0.125, 1.0 / 3.0, 0.01, 1e-5, 9.0}};
  const auto text = leea::format_metrics_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), leea::kMetricsHeader);
  auto back = leea::parse_metrics_csv(text);
  ASSERT_EQ(back.size(), 2u);
  for (auto& r : rows) r.wall_ms = 0.0;
  EXPECT_EQ(back, rows);
  EXPECT_THROW(leea::parse_metrics_csv("wrong header\n"), leea::ParseError);
}

TEST(ResultsCsv, RoundTripWithOptionalTest) {
  leea::CellResults c{"cell-a", {0, 1}, {5, 6}, {0.5, 0.75}, {std::nullopt, 0.8}};
  const auto back = leea::parse_results_csv(leea::format_results_csv(c));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], c);
}

TEST_F(ExperimentRun, RunIsByteReproducibleAcrossRunsAndThreads) {
  const auto cfg = quick_smoke();
  leea::set_worker_count(1);
  leea::run_experiment(cfg, root_ / "a");
  leea::run_experiment(cfg, root_ / "b");
  leea::set_worker_count(4);
  leea::run_experiment(cfg, root_ / "c");
  for (const char* run : {"run-000", "run-001"}) {
    const auto a = slurp(root_ / "a" / run / "metrics.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(root_ / "b" / run / "metrics.csv"));
    EXPECT_EQ(a, slurp(root_ / "c" / run / "metrics.csv"));
    EXPECT_EQ(slurp(root_ / "a" / run / "checkpoint.bin"), slurp(root_ / "c" / run / "checkpoint.bin"));
  }
  EXPECT_EQ(slurp(root_ / "a" / "results.csv"), slurp(root_ / "c" / "results.csv"));
}

TEST_F(ExperimentRun, RunWritesTheDocumentedLayout) {
  auto cfg = quick_smoke();
  cfg.seed = 40;
  const auto cell = leea::run_experiment(cfg, root_);
  EXPECT_EQ(cell.seeds, (std::vector<std::uint64_t>{40, 41}));
  EXPECT_TRUE(fs::exists(root_ / "config.txt"));
  EXPECT_EQ(leea::load_config(root_ / "config.txt"), cfg);
  for (const char* run : {"run-000", "run-001"}) {
    const auto metrics = leea::parse_metrics_csv(slurp(root_ / run / "metrics.csv"));
    std::vector<std::size_t> gens;
    for (const auto& m : metrics) gens.push_back(m.generation);
    EXPECT_EQ(gens, (std::vector<std::size_t>{0, 10, 20}));
    EXPECT_EQ(slurp(root_ / run / "timing.csv").substr(0, 18), "generation,wall_ms");
    EXPECT_TRUE(fs::exists(root_ / run / "checkpoint.bin"));
  }
  const auto m0 = slurp(root_ / "run-000" / "metrics.csv");
  const auto m1 = slurp(root_ / "run-001" / "metrics.csv");
  EXPECT_NE(m0, m1);
  const auto best = leea::load_checkpoint(root_ / "run-000" / "checkpoint.bin");
  EXPECT_EQ(best.spec(), cfg.network);
}

TEST_F(ExperimentRun, InvalidConfigFailsBeforeWriting) {
  auto cfg = quick_smoke();
  cfg.network.layer_units.back() = 9;
  EXPECT_THROW(leea::run_experiment(cfg, root_ / "x"), leea::ConfigError);
  EXPECT_FALSE(fs::exists(root_ / "x" / "run-000"));

  cfg = leea::preset("paper-default");
  cfg.data.directory = root_ / "missing";
  EXPECT_THROW(leea::run_experiment(cfg, root_ / "y"), std::exception);
  EXPECT_FALSE(fs::exists(root_ / "y" / "run-000"));
}

TEST(Sweep, ParsesAxes) {
  const auto a = leea::parse_sweep_axis("batch_size=8,256");
  EXPECT_EQ(a.key, "batch_size");
  EXPECT_EQ(a.values, (std::vector<std::string>{"8", "256"}));
  const auto linked = leea::parse_sweep_axis("p_crossover:p_mutation=0:0.95,0.5:0.45");
  EXPECT_EQ(linked.key, "p_crossover:p_mutation");
  EXPECT_THROW(leea::parse_sweep_axis("nokey=1"), leea::ConfigError);
  EXPECT_THROW(leea::parse_sweep_axis("alpha"), leea::ConfigError);
  EXPECT_THROW(leea::parse_sweep_axis("alpha="), leea::ConfigError);
  EXPECT_THROW(leea::parse_sweep_axis("p_crossover:p_mutation=0.5"), leea::ConfigError);
}

TEST(Sweep, ExpandsFirstAxisSlowest) {
  const auto base = leea::preset("smoke");
  const auto cells = leea::expand_sweep(
      base, {leea::parse_sweep_axis("batch_size=8,32"), leea::parse_sweep_axis("alpha=1,0.25")});
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].label, "batch_size-8_alpha-1");
  EXPECT_EQ(cells[1].label, "batch_size-8_alpha-0.25");
  EXPECT_EQ(cells[2].label, "batch_size-32_alpha-1");
  EXPECT_EQ(cells[3].config.evo.batch_size, 32u);
  EXPECT_EQ(cells[3].config.evo.alpha, 0.25);
  EXPECT_EQ(cells[3].config.evo.population, base.evo.population);

  const auto linked =
      leea::expand_sweep(base, {leea::parse_sweep_axis("p_crossover:p_mutation=0:0.95,0.5:0.45")});
  ASSERT_EQ(linked.size(), 2u);
  EXPECT_EQ(linked[0].config.evo.p_crossover, 0.0);
  EXPECT_EQ(linked[0].config.evo.p_mutation, 0.95);
  EXPECT_EQ(linked[1].config.evo.p_mutation, 0.45);
}

TEST_F(ExperimentRun, SingleCellSweepMatchesDirectRun) {
  auto cfg = quick_smoke();
  const auto cells = leea::run_sweep(cfg, {leea::parse_sweep_axis("alpha=1")}, root_ / "sweep");
  ASSERT_EQ(cells.size(), 1u);
  cfg.name = cells[0].cell;
  const auto direct = leea::run_experiment(cfg, root_ / "direct");
  EXPECT_EQ(cells[0], direct);
  const auto sub = root_ / "sweep" / ("000-" + cells[0].cell);
  EXPECT_EQ(slurp(sub / "run-001" / "metrics.csv"), slurp(root_ / "direct" / "run-001" / "metrics.csv"));
}

TEST_F(ExperimentRun, SweepReportAndSummarizeAgree) {
  auto cfg = quick_smoke();
  cfg.repeats = 3;
  const auto cells = leea::run_sweep(
      cfg, {leea::parse_sweep_axis("batch_size=8,64"), leea::parse_sweep_axis("alpha=1,0.25")}, root_);
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& c : cells) EXPECT_EQ(c.final_val_accuracy.size(), 3u);

  const auto report = slurp(root_ / "report.txt");
  EXPECT_EQ(report, leea::render_report(cells));
  EXPECT_EQ(leea::read_results(root_), cells);

  // 4x4 matrix minus the diagonal.
  std::istringstream pv(slurp(root_ / "pvalues.csv"));
  std::string line;
  std::getline(pv, line);
  EXPECT_EQ(line, "row,column,p_value");
  std::size_t entries = 0;
  while (std::getline(pv, line)) ++entries;
  EXPECT_EQ(entries, 12u);

  const auto again = root_ / "again";
  leea::write_report(again, leea::read_results(root_));
  EXPECT_EQ(slurp(again / "report.txt"), report);
  EXPECT_EQ(slurp(again / "summary.csv"), slurp(root_ / "summary.csv"));
  EXPECT_EQ(slurp(again / "pvalues.csv"), slurp(root_ / "pvalues.csv"));
  EXPECT_EQ(slurp(again / "improvements.csv"), slurp(root_ / "improvements.csv"));
}

TEST(Report, DegenerateComparisonsAreMarked) {
  leea::CellResults a{"a", {0, 1}, {1, 2}, {0.5, 0.5}, {std::nullopt, std::nullopt}};
  leea::CellResults b{"b", {0, 1}, {1, 2}, {0.5, 0.5}, {std::nullopt, std::nullopt}};
  const auto text = leea::render_report({a, b});
  EXPECT_NE(text.find("n/a"), std::string::npos);
  EXPECT_NE(text.find("0.00"), std::string::npos);
}

TEST(SmokeTraining, ValidationAccuracyImprovesOverGenerationZero) {
  auto cfg = leea::preset("smoke");
  const auto data = leea::load_experiment_data(cfg);
  std::size_t improved = 0;
  const std::size_t repeats = 15;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto run = leea::run_evolution(cfg, data, r);
    if (run.metrics.back().best_val_accuracy > run.metrics.front().best_val_accuracy) ++improved;
  }
  EXPECT_GE(improved, 14u);
}

}  // namespace
