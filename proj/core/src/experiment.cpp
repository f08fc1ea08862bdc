#include "leea/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "leea/errors.hpp"
#include "leea/evo.hpp"
#include "leea/fitness.hpp"
#include "leea/grad.hpp"
#include "leea/stats.hpp"

namespace leea {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_fields(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string run_dir_name(std::size_t run) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%03zu", run);
  return buf;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string format_metrics_csv(const std::vector<MetricRecord>& records) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.run) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.generation) +
           ',' + format_double(r.best_fitness) + ',' + format_double(r.best_val_accuracy) + ',' +
           format_double(r.sigma_mean) + ',' + format_double(r.sigma_std) + '\n';
  }
  return out;
}

std::vector<MetricRecord> parse_metrics_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != kMetricsHeader) {
    throw ParseError(0, "metrics CSV header mismatch");
  }
  std::vector<MetricRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_fields(lines[i]);
    if (f.size() != 7) throw ParseError(i, "metrics CSV row has " + std::to_string(f.size()) + " fields");
    MetricRecord r;
    r.run = parse_unsigned(f[0], "run");
    r.seed = parse_unsigned(f[1], "seed");
    r.generation = parse_unsigned(f[2], "generation");
    r.best_fitness = parse_double(f[3], "best_fitness");
    r.best_val_accuracy = parse_double(f[4], "best_val_accuracy");
    r.sigma_mean = parse_double(f[5], "sigma_mean");
    r.sigma_std = parse_double(f[6], "sigma_std");
    out.push_back(r);
  }
  return out;
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const DataConfig& dc = cfg.data;
  ExperimentData out;
  if (dc.source == DataSource::kMnist) {
    const Dataset full = load_idx(dc.directory / "train-images-idx3-ubyte",
                                  dc.directory / "train-labels-idx1-ubyte");
    if (full.rows() != 28 || full.cols() != 28) throw ConfigError("MNIST images must be 28x28");
    if (full.size() < dc.pool) {
      throw ConfigError("data_pool " + std::to_string(dc.pool) + " exceeds the " +
                        std::to_string(full.size()) + " training images in " + dc.directory.string());
    }
    auto parts = split(full.head(dc.pool), dc.n_train, dc.n_val, dc.split_seed);
    out.train = std::move(parts.train);
    out.validation = std::move(parts.validation);
    if (cfg.report_test) {
      out.test = load_idx(dc.directory / "t10k-images-idx3-ubyte", dc.directory / "t10k-labels-idx1-ubyte");
    }
  } else {
    BlobSpec spec;
    spec.classes = dc.blob_classes;
    spec.rows = cfg.network.input_rows;
    spec.cols = cfg.network.input_cols;
    spec.per_class = dc.blob_per_class;
    spec.separation = dc.blob_separation;
    const Dataset full = synthetic_blobs(spec, dc.blob_seed);
    // Validation and test come from the same shuffled tail, so the
    // train/validation split matches split(full, n_train, n_val).
    auto parts = split(full, dc.n_train, full.size() - dc.n_train, dc.split_seed);
    out.train = std::move(parts.train);
    out.validation = parts.validation.head(dc.n_val);
    if (cfg.report_test) {
      std::vector<std::size_t> rest;
      for (std::size_t i = dc.n_val; i < parts.validation.size(); ++i) rest.push_back(i);
      out.test = parts.validation.subset(rest);
    }
  }
  return out;
}

std::uint64_t run_seed(const ExperimentConfig& cfg, std::size_t repeat) { return cfg.seed + repeat; }

RunResult run_evolution(const ExperimentConfig& cfg, const ExperimentData& data, std::size_t repeat) {
  const auto start = std::chrono::steady_clock::now();
  const EvoConfig& evo = cfg.evo;
  RunResult result;
  result.run = repeat;
  result.seed = run_seed(cfg, repeat);
  const RunStreams streams(result.seed);

  auto batch_for = [&](std::size_t generation) {
    Rng rng = streams.make(StreamPurpose::kBatch, generation);
    return sample_batch(data.train, evo.batch_size, rng, evo.batch_with_replacement);
  };

  auto record = [&](const EvalState& state) {
    const auto order = rank_by_fitness(state.adjusted);
    const std::size_t best = order.front();
    const std::size_t pick[] = {best};
    MetricRecord r;
    r.run = repeat;
    r.seed = result.seed;
    r.generation = state.generation;
    r.best_fitness = state.adjusted[best];
    r.best_val_accuracy = full_set_accuracy(state.population.select(pick), data.validation).front();
    const SigmaStats s = sigma_stats(state, evo);
    r.sigma_mean = s.mean;
    r.sigma_std = s.stddev;
    r.wall_ms = elapsed_ms(start);
    result.metrics.push_back(r);
  };

  EvalState state = initialize(evo, cfg.network, batch_for(0), streams);
  record(state);
  for (std::size_t g = 1; g <= evo.generations; ++g) {
    state = step(state, batch_for(g), evo, streams);
    if (g % cfg.validation_every == 0 || g == evo.generations) record(state);
  }

  // Report the elite with the best full validation accuracy.
  const auto order = rank_by_fitness(state.adjusted);
  const std::size_t elites = std::max<std::size_t>(1, offspring_counts(evo).elites);
  const std::vector<std::size_t> candidates(order.begin(), order.begin() + static_cast<long>(elites));
  const PopulationParams elite_params = state.population.select(candidates);
  const auto val = full_set_accuracy(elite_params, data.validation);
  const std::size_t winner = static_cast<std::size_t>(std::max_element(val.begin(), val.end()) - val.begin());
  const std::size_t pick[] = {winner};
  result.best = elite_params.select(pick);
  result.final_val_accuracy = val[winner];
  if (cfg.report_test && data.test) {
    result.test_accuracy = full_set_accuracy(result.best, *data.test).front();
  }
  return result;
}

RunResult run_gradient(const ExperimentConfig& cfg, const ExperimentData& data, std::size_t repeat) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.run = repeat;
  result.seed = run_seed(cfg, repeat);
  GradTrainResult trained = sgd_train(cfg.grad, cfg.network, data.train, data.validation, result.seed);
  for (const auto& e : trained.log) {
    MetricRecord r;
    r.run = repeat;
    r.seed = result.seed;
    r.generation = e.epoch;
    r.best_fitness = -e.train_loss;
    r.best_val_accuracy = e.validation_accuracy;
    r.wall_ms = elapsed_ms(start);
    result.metrics.push_back(r);
  }
  result.best = std::move(trained.network);
  result.final_val_accuracy = full_set_accuracy(result.best, data.validation).front();
  if (cfg.report_test && data.test) {
    result.test_accuracy = full_set_accuracy(result.best, *data.test).front();
  }
  return result;
}

std::string format_results_csv(const CellResults& results) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (std::size_t i = 0; i < results.runs.size(); ++i) {
    out += results.cell + ',' + std::to_string(results.runs[i]) + ',' + std::to_string(results.seeds[i]) +
           ',' + format_double(results.final_val_accuracy[i]) + ',' +
           (results.test_accuracy[i] ? format_double(*results.test_accuracy[i]) : std::string()) + '\n';
  }
  return out;
}

std::vector<CellResults> parse_results_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines.front() != kResultsHeader) throw ParseError(0, "results CSV header mismatch");
  std::vector<CellResults> cells;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_fields(lines[i]);
    if (f.size() != 5) throw ParseError(i, "results CSV row has " + std::to_string(f.size()) + " fields");
    auto it = std::find_if(cells.begin(), cells.end(), [&](const CellResults& c) { return c.cell == f[0]; });
    if (it == cells.end()) {
      cells.push_back({f[0], {}, {}, {}, {}});
      it = cells.end() - 1;
    }
    it->runs.push_back(parse_unsigned(f[1], "run"));
    it->seeds.push_back(parse_unsigned(f[2], "seed"));
    it->final_val_accuracy.push_back(parse_double(f[3], "final_val_accuracy"));
    it->test_accuracy.push_back(f[4].empty() ? std::nullopt
                                             : std::optional<double>(parse_double(f[4], "test_accuracy")));
  }
  return cells;
}

CellResults run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir,
                           const ProgressFn& progress) {
  cfg.validate();
  const ExperimentData data = load_experiment_data(cfg);
  fs::create_directories(out_dir);
  save_config(out_dir / "config.txt", cfg);

  CellResults cell;
  cell.cell = cfg.name;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    RunResult run = cfg.trainer == TrainerKind::kEvolution ? run_evolution(cfg, data, r)
                                                           : run_gradient(cfg, data, r);
    const fs::path run_dir = out_dir / run_dir_name(r);
    fs::create_directories(run_dir);
    write_text(run_dir / "metrics.csv", format_metrics_csv(run.metrics));
    std::string timing = "generation,wall_ms\n";
    for (const auto& m : run.metrics) {
      timing += std::to_string(m.generation) + ',' + format_double(m.wall_ms) + '\n';
    }
    write_text(run_dir / "timing.csv", timing);
    save_checkpoint(run_dir / "checkpoint.bin", run.best);

    cell.runs.push_back(r);
    cell.seeds.push_back(run.seed);
    cell.final_val_accuracy.push_back(run.final_val_accuracy);
    cell.test_accuracy.push_back(run.test_accuracy);
    if (progress) {
      std::string msg = cfg.name + " run " + std::to_string(r) + " seed " + std::to_string(run.seed) +
                        ": validation accuracy " + format_double(run.final_val_accuracy);
      if (run.test_accuracy) msg += ", test accuracy " + format_double(*run.test_accuracy);
      if (!run.metrics.empty()) msg += " (" + format_double(std::round(run.metrics.back().wall_ms)) + " ms)";
      progress(msg);
    }
  }
  write_text(out_dir / "results.csv", format_results_csv(cell));
  return cell;
}

namespace {

// "a:b" names linked keys; each value then carries one part per key.
std::vector<std::string> axis_parts(const std::string& text) { return split_fields(text, ':'); }

}  // namespace

SweepAxis parse_sweep_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw ConfigError("sweep axis must look like key=v1,v2,... or k1:k2=a1:a2,b1:b2: '" + text + "'");
  }
  SweepAxis axis{text.substr(0, eq), split_fields(text.substr(eq + 1))};
  const auto keys = axis_parts(axis.key);
  ExperimentConfig probe;
  for (const auto& key : keys) (void)config_value(probe, key);
  for (const auto& v : axis.values) {
    const auto parts = axis_parts(v);
    if (v.empty() || parts.size() != keys.size() ||
        std::any_of(parts.begin(), parts.end(), [](const std::string& x) { return x.empty(); })) {
      throw ConfigError("sweep value '" + v + "' does not match keys '" + axis.key + "'");
    }
  }
  return axis;
}

std::vector<SweepCell> expand_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes) {
  std::vector<SweepCell> cells{{"", base}};
  for (const auto& axis : axes) {
    std::vector<SweepCell> next;
    for (const auto& cell : cells) {
      for (const auto& value : axis.values) {
        SweepCell c = cell;
        const auto keys = axis_parts(axis.key);
        const auto parts = axis_parts(value);
        if (keys.size() != parts.size()) {
          throw ConfigError("sweep value '" + value + "' does not match keys '" + axis.key + "'");
        }
        for (std::size_t i = 0; i < keys.size(); ++i) {
          apply_setting(c.config, keys[i], parts[i]);
          c.label += (c.label.empty() ? "" : "_") + keys[i] + "-" + parts[i];
        }
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  for (auto& c : cells) {
    if (c.label.empty()) c.label = base.name;
    c.config.name = c.label;
    c.config.validate();
  }
  return cells;
}

std::vector<CellResults> run_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes,
                                   const fs::path& out_dir, const ProgressFn& progress) {
  const auto cells = expand_sweep(base, axes);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%03zu-", i);
    run_experiment(cells[i].config, out_dir / (prefix + cells[i].label), progress);
  }
  // The report is always rebuilt from the files on disk, exactly like `summarize`.
  auto results = read_results(out_dir);
  write_report(out_dir, results);
  return results;
}

std::vector<CellResults> read_results(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "results.csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<CellResults> merged;
  for (const auto& file : files) {
    for (auto& cell : parse_results_csv(read_text(file))) {
      auto it = std::find_if(merged.begin(), merged.end(),
                             [&](const CellResults& c) { return c.cell == cell.cell; });
      if (it == merged.end()) {
        merged.push_back(std::move(cell));
        continue;
      }
      it->runs.insert(it->runs.end(), cell.runs.begin(), cell.runs.end());
      it->seeds.insert(it->seeds.end(), cell.seeds.begin(), cell.seeds.end());
      it->final_val_accuracy.insert(it->final_val_accuracy.end(), cell.final_val_accuracy.begin(),
                                    cell.final_val_accuracy.end());
      it->test_accuracy.insert(it->test_accuracy.end(), cell.test_accuracy.begin(), cell.test_accuracy.end());
    }
  }
  return merged;
}

namespace {

std::string fixed(double v, int digits = 4) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::optional<double> pairwise_p(const CellResults& a, const CellResults& b) {
  try {
    return mann_whitney_u(a.final_val_accuracy, b.final_val_accuracy).p_value;
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

std::optional<double> pairwise_improvement(const CellResults& from, const CellResults& to) {
  try {
    return relative_improvement(from.final_val_accuracy, to.final_val_accuracy);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

}  // namespace

std::string render_report(const std::vector<CellResults>& cells) {
  std::ostringstream os;
  os << "validation accuracy per cell\n";
  os << "cell\tn\tmin\tq1\tmedian\tq3\tmax\n";
  for (const auto& c : cells) {
    const Summary s = summarize(c.final_val_accuracy);
    os << c.cell << '\t' << s.count << '\t' << fixed(s.min) << '\t' << fixed(s.q1) << '\t'
       << fixed(s.median) << '\t' << fixed(s.q3) << '\t' << fixed(s.max) << '\n';
  }
  bool any_test = false;
  for (const auto& c : cells) {
    for (const auto& t : c.test_accuracy) any_test = any_test || t.has_value();
  }
  if (any_test) {
    os << "\ntest accuracy per cell (median)\n";
    for (const auto& c : cells) {
      std::vector<double> t;
      for (const auto& v : c.test_accuracy) {
        if (v) t.push_back(*v);
      }
      os << c.cell << '\t' << (t.empty() ? std::string("n/a") : fixed(median(t))) << '\n';
    }
  }
  if (cells.size() > 1) {
    os << "\none-sided Mann-Whitney U p-values (row greater than column)\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      os << cells[i].cell;
      for (std::size_t j = 0; j < cells.size(); ++j) {
        if (i == j) {
          os << "\t-";
        } else {
          const auto p = pairwise_p(cells[i], cells[j]);
          os << '\t' << (p ? fixed(*p) : std::string("n/a"));
        }
      }
      os << '\n';
    }
    os << "\nrelative improvement of median validation accuracy, row to column (%)\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      os << cells[i].cell;
      for (std::size_t j = 0; j < cells.size(); ++j) {
        if (i == j) {
          os << "\t-";
        } else {
          const auto r = pairwise_improvement(cells[i], cells[j]);
          os << '\t' << (r ? fixed(*r, 2) : std::string("n/a"));
        }
      }
      os << '\n';
    }
  }
  return os.str();
}

void write_report(const fs::path& dir, const std::vector<CellResults>& cells) {
  fs::create_directories(dir);
  write_text(dir / "report.txt", render_report(cells));

  std::string summary = "cell,n,min,q1,median,q3,max\n";
  for (const auto& c : cells) {
    const Summary s = summarize(c.final_val_accuracy);
    summary += c.cell + ',' + std::to_string(s.count) + ',' + format_double(s.min) + ',' +
               format_double(s.q1) + ',' + format_double(s.median) + ',' + format_double(s.q3) + ',' +
               format_double(s.max) + '\n';
  }
  write_text(dir / "summary.csv", summary);

  std::string pvalues = "row,column,p_value\n";
  std::string improvements = "from,to,percent\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (i == j) continue;
      const auto p = pairwise_p(cells[i], cells[j]);
      pvalues += cells[i].cell + ',' + cells[j].cell + ',' + (p ? format_double(*p) : "nan") + '\n';
      const auto r = pairwise_improvement(cells[i], cells[j]);
      improvements += cells[i].cell + ',' + cells[j].cell + ',' + (r ? format_double(*r) : "nan") + '\n';
    }
  }
  write_text(dir / "pvalues.csv", pvalues);
  write_text(dir / "improvements.csv", improvements);
}

}  // namespace leea
