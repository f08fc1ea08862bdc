#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "leea/data.hpp"
#include "leea/evo.hpp"
#include "leea/grad.hpp"
#include "leea/model.hpp"

namespace leea {

enum class TrainerKind { kEvolution, kGradient };
enum class DataSource { kMnist, kBlobs };

struct DataConfig {
  DataSource source = DataSource::kMnist;
  /// Directory holding the standard IDX files (train-images-idx3-ubyte, ...).
  std::filesystem::path directory = "data/mnist";
  /// Leading examples of the training file that form the working set.
  std::size_t pool = 50000;
  std::size_t n_train = 45000;
  std::size_t n_val = 5000;
  std::uint64_t split_seed = 0;
  /// Synthetic data; image extents come from the network input.
  std::size_t blob_classes = 10;
  std::size_t blob_per_class = 500;
  double blob_separation = 4.0;
  std::uint64_t blob_seed = 0;

  bool operator==(const DataConfig&) const = default;
};

/// Everything needed to reproduce one experiment.
///
/// File form: one `key = value` per line, `#` starts a comment, unknown keys
/// are rejected. See format_config() for the full key list.
struct ExperimentConfig {
  std::string name = "experiment";
  TrainerKind trainer = TrainerKind::kEvolution;
  EvoConfig evo;
  GradConfig grad;
  NetworkSpec network = NetworkSpec::mnist();
  DataConfig data;
  std::size_t repeats = 1;
  std::uint64_t seed = 1;
  /// Generations between full-validation measurements of the fitness-best individual.
  std::size_t validation_every = 50;
  bool report_test = false;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Sets one key from its text form. Throws ConfigError on unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Every key in a fixed order.
std::vector<std::string> config_keys();
std::string config_value(const ExperimentConfig& cfg, std::string_view key);

ExperimentConfig parse_config(std::string_view text);
std::string format_config(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

/// Named configurations: "paper-default", "paper-final", "adam", "smoke".
ExperimentConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// Shortest text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view what);
std::uint64_t parse_unsigned(std::string_view text, std::string_view what);

}  // namespace leea
