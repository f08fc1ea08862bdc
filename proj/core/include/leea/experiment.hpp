#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "leea/config.hpp"
#include "leea/data.hpp"
#include "leea/model.hpp"

namespace leea {

/// One row of a run's metrics.csv. For gradient runs `generation` is the
/// epoch and `best_fitness` is the negated mean training loss.
struct MetricRecord {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double best_val_accuracy = 0.0;
  double sigma_mean = 0.0;
  double sigma_std = 0.0;
  /// Written to timing.csv only, so metrics.csv stays byte-reproducible.
  double wall_ms = 0.0;

  bool operator==(const MetricRecord&) const = default;
};

inline constexpr const char* kMetricsHeader =
    "run,seed,generation,best_fitness,best_val_accuracy,sigma_mean,sigma_std";
inline constexpr const char* kResultsHeader =
    "cell,run,seed,final_val_accuracy,test_accuracy";

std::string format_metrics_csv(const std::vector<MetricRecord>& records);
std::vector<MetricRecord> parse_metrics_csv(const std::string& text);

struct ExperimentData {
  Dataset train;
  Dataset validation;
  std::optional<Dataset> test;
};

/// Loads (or synthesizes) and splits the data named by the config. Fails
/// before any training starts.
ExperimentData load_experiment_data(const ExperimentConfig& cfg);

struct RunResult {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::vector<MetricRecord> metrics;
  /// Accuracy of the reported network on the full validation set.
  double final_val_accuracy = 0.0;
  std::optional<double> test_accuracy;
  PopulationParams best;
};

/// Repeat r of the config runs with seed `cfg.seed + r`.
std::uint64_t run_seed(const ExperimentConfig& cfg, std::size_t repeat);

/// One evolutionary run. Every `validation_every` generations (and at the
/// end) the fitness-best individual is scored on the validation set; the
/// reported network is the elite with the highest validation accuracy.
RunResult run_evolution(const ExperimentConfig& cfg, const ExperimentData& data, std::size_t repeat);

RunResult run_gradient(const ExperimentConfig& cfg, const ExperimentData& data, std::size_t repeat);

struct CellResults {
  std::string cell;
  std::vector<std::size_t> runs;
  std::vector<std::uint64_t> seeds;
  std::vector<double> final_val_accuracy;
  std::vector<std::optional<double>> test_accuracy;

  bool operator==(const CellResults&) const = default;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs all repeats and writes into `out_dir`:
///   config.txt, results.csv,
///   run-NNN/metrics.csv, run-NNN/timing.csv, run-NNN/checkpoint.bin
CellResults run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                           const ProgressFn& progress = {});

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/// Parses "key=v1,v2,...". Linked keys move together:
/// "p_crossover:p_mutation=0:0.95,0.5:0.45".
SweepAxis parse_sweep_axis(const std::string& text);

struct SweepCell {
  std::string label;
  ExperimentConfig config;
};

/// Cartesian product of the axes applied to `base`, first axis slowest.
std::vector<SweepCell> expand_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes);

/// Runs every cell into out_dir/<label>/ and writes the comparison report.
std::vector<CellResults> run_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes,
                                   const std::filesystem::path& out_dir,
                                   const ProgressFn& progress = {});

std::string format_results_csv(const CellResults& results);
std::vector<CellResults> parse_results_csv(const std::string& text);

/// Collects every results.csv below `dir` (sorted by path), merged by cell.
std::vector<CellResults> read_results(const std::filesystem::path& dir);

/// Per-cell summaries, pairwise one-sided Mann-Whitney p-values
/// (row stochastically greater than column) and pairwise relative
/// improvements of the median validation accuracy (row -> column).
std::string render_report(const std::vector<CellResults>& cells);

/// Writes report.txt, summary.csv, pvalues.csv and improvements.csv into `dir`.
void write_report(const std::filesystem::path& dir, const std::vector<CellResults>& cells);

}  // namespace leea
