// leea: command line front end for training, sweeps and reporting.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "leea/config.hpp"
#include "leea/errors.hpp"
#include "leea/experiment.hpp"
#include "leea/fitness.hpp"
#include "leea/model.hpp"
#include "leea/parallel.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset_name;
  std::string data_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  auto* cfg = cmd->add_option("-c,--config", o.config_path, "Experiment config file (key = value lines)")
                  ->check(CLI::ExistingFile);
  cmd->add_option("-p,--preset", o.preset_name, "Named preset: paper-default, paper-final, adam, smoke")
      ->excludes(cfg);
  cmd->add_option("-d,--data-dir", o.data_dir, "Directory with the MNIST IDX files");
  cmd->add_option("-s,--seed", o.seed, "Seed base; repeat r uses seed + r");
  cmd->add_option("-r,--repeats", o.repeats, "Number of independently seeded repeats")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--set", o.settings, "Override a config key, e.g. --set population=200");
}

leea::ExperimentConfig build_config(const CommonOptions& o, const std::string& fallback_preset) {
  leea::ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    cfg = leea::load_config(o.config_path);
  } else {
    cfg = leea::preset(o.preset_name.empty() ? fallback_preset : o.preset_name);
  }
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw leea::ConfigError("--set expects key=value, got '" + s + "'");
    leea::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!o.data_dir.empty()) cfg.data.directory = o.data_dir;
  if (o.seed) cfg.seed = *o.seed;
  if (o.repeats) cfg.repeats = *o.repeats;
  return cfg;
}

void print_progress(const std::string& msg) { std::cerr << msg << std::endl; }

void print_cell(const leea::CellResults& cell) {
  std::cout << leea::render_report({cell});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limited-evaluation evolutionary training of neural networks"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("-t,--threads", threads, "Worker threads (0 = all cores)");

  CommonOptions ea_opts, adam_opts, sweep_opts, eval_opts, show_opts;
  std::string ea_out, adam_out, sweep_out, summarize_in, summarize_out, checkpoint_path;
  std::string eval_on = "validation";
  std::vector<std::string> axes;

  auto* train_ea = app.add_subcommand("train-ea", "Train with the evolutionary algorithm");
  add_common(train_ea, ea_opts);
  train_ea->add_option("-o,--out", ea_out, "Output directory")->required();

  auto* train_adam = app.add_subcommand("train-adam", "Train the gradient baseline");
  add_common(train_adam, adam_opts);
  train_adam->add_option("-o,--out", adam_out, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Run the Cartesian product of config axes");
  add_common(sweep, sweep_opts);
  sweep->add_option("-o,--out", sweep_out, "Output directory")->required();
  sweep->add_option("-a,--axis", axes, "Axis as key=v1,v2,... (repeatable; first axis varies slowest)")
      ->required();

  auto* summarize = app.add_subcommand("summarize", "Rebuild the comparison report from saved results");
  summarize->add_option("input", summarize_in, "Directory searched recursively for results.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  summarize->add_option("-o,--out", summarize_out, "Where to write the report files (default: input)");

  auto* eval = app.add_subcommand("eval-checkpoint", "Score a saved checkpoint on a data split");
  add_common(eval, eval_opts);
  eval->add_option("checkpoint", checkpoint_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--on", eval_on, "Split to score")
      ->check(CLI::IsMember({"train", "validation", "test"}));

  auto* show = app.add_subcommand("show-config", "Print the resolved config");
  add_common(show, show_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    leea::set_worker_count(threads);

    if (*train_ea) {
      auto cfg = build_config(ea_opts, "paper-default");
      cfg.trainer = leea::TrainerKind::kEvolution;
      print_cell(leea::run_experiment(cfg, ea_out, print_progress));
    } else if (*train_adam) {
      auto cfg = build_config(adam_opts, "adam");
      cfg.trainer = leea::TrainerKind::kGradient;
      print_cell(leea::run_experiment(cfg, adam_out, print_progress));
    } else if (*sweep) {
      const auto cfg = build_config(sweep_opts, "paper-default");
      std::vector<leea::SweepAxis> parsed;
      for (const auto& a : axes) parsed.push_back(leea::parse_sweep_axis(a));
      const auto cells = leea::run_sweep(cfg, parsed, sweep_out, print_progress);
      std::cout << leea::render_report(cells);
    } else if (*summarize) {
      const auto cells = leea::read_results(summarize_in);
      if (cells.empty()) throw leea::ValidationError("no results.csv found below " + summarize_in);
      leea::write_report(summarize_out.empty() ? fs::path(summarize_in) : fs::path(summarize_out), cells);
      std::cout << leea::render_report(cells);
    } else if (*eval) {
      auto cfg = build_config(eval_opts, "paper-default");
      const auto params = leea::load_checkpoint(checkpoint_path);
      cfg.network = params.spec();
      cfg.report_test = eval_on == "test";
      const auto data = leea::load_experiment_data(cfg);
      const leea::Dataset& target =
          eval_on == "train" ? data.train : eval_on == "test" ? *data.test : data.validation;
      const auto acc = leea::full_set_accuracy(params, target);
      for (std::size_t k = 0; k < acc.size(); ++k) {
        std::cout << "individual " << k << " " << eval_on << " accuracy " << leea::format_double(acc[k])
                  << " (" << target.size() << " examples)\n";
      }
    } else if (*show) {
      std::cout << leea::format_config(build_config(show_opts, "paper-default"));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
