#include "leea/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "leea/errors.hpp"

namespace leea {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("'" + std::string(text) + "' is not a number for " + std::string(what));
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("'" + std::string(text) + "' is not a non-negative integer for " +
                      std::string(what));
  }
  return v;
}

namespace {

bool parse_bool(std::string_view text, std::string_view what) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("'" + std::string(text) + "' is not a boolean for " + std::string(what));
}

std::string format_bool(bool v) { return v ? "true" : "false"; }

std::string format_units(const std::vector<std::size_t>& units) {
  std::string out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(units[i]);
  }
  return out;
}

std::vector<std::size_t> parse_units(std::string_view text) {
  std::vector<std::size_t> units;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    units.push_back(parse_unsigned(text.substr(start, comma - start), "layers"));
    start = comma + 1;
  }
  return units;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define LEEA_SIZE(key, expr)                                                              \
  Field {                                                                                 \
    key, [](const ExperimentConfig& c) { return std::to_string(c.expr); },                \
        [](ExperimentConfig& c, std::string_view v) {                                     \
          c.expr = static_cast<decltype(c.expr)>(parse_unsigned(v, key));                 \
        }                                                                                 \
  }
#define LEEA_REAL(key, expr)                                                              \
  Field {                                                                                 \
    key, [](const ExperimentConfig& c) { return format_double(c.expr); },                 \
        [](ExperimentConfig& c, std::string_view v) { c.expr = parse_double(v, key); }    \
  }
#define LEEA_BOOL(key, expr)                                                              \
  Field {                                                                                 \
    key, [](const ExperimentConfig& c) { return format_bool(c.expr); },                   \
        [](ExperimentConfig& c, std::string_view v) { c.expr = parse_bool(v, key); }      \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"name", [](const ExperimentConfig& c) { return c.name; },
       [](ExperimentConfig& c, std::string_view v) { c.name = std::string(v); }},
      {"trainer",
       [](const ExperimentConfig& c) {
         return std::string(c.trainer == TrainerKind::kEvolution ? "ea" : "gradient");
       },
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "ea") {
           c.trainer = TrainerKind::kEvolution;
         } else if (v == "gradient") {
           c.trainer = TrainerKind::kGradient;
         } else {
           throw ConfigError("trainer must be 'ea' or 'gradient'");
         }
       }},
      // Evolutionary algorithm.
      LEEA_SIZE("population", evo.population),
      LEEA_REAL("p_elite", evo.p_elite),
      LEEA_REAL("p_crossover", evo.p_crossover),
      LEEA_REAL("p_mutation", evo.p_mutation),
      LEEA_REAL("rho", evo.rho),
      LEEA_REAL("alpha", evo.alpha),
      LEEA_REAL("sigma", evo.sigma),
      {"sigma_mode", [](const ExperimentConfig& c) { return to_string(c.evo.sigma_mode); },
       [](ExperimentConfig& c, std::string_view v) { c.evo.sigma_mode = parse_sigma_mode(std::string(v)); }},
      LEEA_REAL("decay_k", evo.decay_k),
      LEEA_REAL("tau", evo.tau),
      {"crossover", [](const ExperimentConfig& c) { return to_string(c.evo.crossover); },
       [](ExperimentConfig& c, std::string_view v) { c.evo.crossover = parse_crossover_op(std::string(v)); }},
      LEEA_SIZE("batch_size", evo.batch_size),
      LEEA_BOOL("batch_with_replacement", evo.batch_with_replacement),
      LEEA_SIZE("generations", evo.generations),
      // Gradient baseline.
      {"optimizer", [](const ExperimentConfig& c) { return to_string(c.grad.optimizer); },
       [](ExperimentConfig& c, std::string_view v) { c.grad.optimizer = parse_grad_optimizer(std::string(v)); }},
      LEEA_REAL("learning_rate", grad.learning_rate),
      LEEA_REAL("beta1", grad.beta1),
      LEEA_REAL("beta2", grad.beta2),
      LEEA_REAL("epsilon", grad.epsilon),
      LEEA_SIZE("grad_batch_size", grad.batch_size),
      LEEA_SIZE("epochs", grad.epochs),
      // Network.
      LEEA_SIZE("input_rows", network.input_rows),
      LEEA_SIZE("input_cols", network.input_cols),
      LEEA_BOOL("pool2x2", network.pool2x2),
      {"layers", [](const ExperimentConfig& c) { return format_units(c.network.layer_units); },
       [](ExperimentConfig& c, std::string_view v) { c.network.layer_units = parse_units(v); }},
      // Data.
      {"dataset",
       [](const ExperimentConfig& c) {
         return std::string(c.data.source == DataSource::kMnist ? "mnist" : "blobs");
       },
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "mnist") {
           c.data.source = DataSource::kMnist;
         } else if (v == "blobs") {
           c.data.source = DataSource::kBlobs;
         } else {
           throw ConfigError("dataset must be 'mnist' or 'blobs'");
         }
       }},
      {"data_dir", [](const ExperimentConfig& c) { return c.data.directory.string(); },
       [](ExperimentConfig& c, std::string_view v) { c.data.directory = std::string(v); }},
      LEEA_SIZE("data_pool", data.pool),
      LEEA_SIZE("n_train", data.n_train),
      LEEA_SIZE("n_val", data.n_val),
      LEEA_SIZE("split_seed", data.split_seed),
      LEEA_SIZE("blob_classes", data.blob_classes),
      LEEA_SIZE("blob_per_class", data.blob_per_class),
      LEEA_REAL("blob_separation", data.blob_separation),
      LEEA_SIZE("blob_seed", data.blob_seed),
      // Protocol.
      LEEA_SIZE("repeats", repeats),
      LEEA_SIZE("seed", seed),
      LEEA_SIZE("validation_every", validation_every),
      LEEA_BOOL("report_test", report_test),
  };
  return table;
}

#undef LEEA_SIZE
#undef LEEA_REAL
#undef LEEA_BOOL

const Field& field(std::string_view key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (validation_every < 1) throw ConfigError("validation_every must be at least 1");
  network.validate();
  if (trainer == TrainerKind::kEvolution) {
    evo.validate();
    (void)offspring_counts(evo);
  } else {
    grad.validate();
  }
  if (data.n_train == 0) throw ConfigError("n_train must be positive");
  if (data.source == DataSource::kMnist) {
    if (network.input_rows != 28 || network.input_cols != 28) {
      throw ConfigError("MNIST input is 28x28");
    }
    if (data.n_train + data.n_val > data.pool) {
      throw ConfigError("n_train + n_val exceeds data_pool");
    }
  } else {
    if (data.blob_classes < 2 || data.blob_classes > 255) {
      throw ConfigError("blob_classes must lie in [2, 255]");
    }
    if (data.n_train + data.n_val > data.blob_classes * data.blob_per_class) {
      throw ConfigError("n_train + n_val exceeds the synthetic dataset size");
    }
  }
  const std::size_t classes =
      data.source == DataSource::kMnist ? std::size_t{10} : data.blob_classes;
  if (network.num_classes() != classes) {
    throw ConfigError("last layer has " + std::to_string(network.num_classes()) +
                      " units but the data has " + std::to_string(classes) + " classes");
  }
  if (trainer == TrainerKind::kEvolution && evo.batch_size > data.n_train &&
      !evo.batch_with_replacement) {
    throw ConfigError("batch_size exceeds n_train");
  }
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  field(key).set(cfg, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

std::string config_value(const ExperimentConfig& cfg, std::string_view key) {
  return field(key).get(cfg);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : fields()) os << f.key << " = " << f.get(cfg) << '\n';
  return os.str();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  out << format_config(cfg);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::string> preset_names() { return {"paper-default", "paper-final", "adam", "smoke"}; }

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig cfg;
  if (name == "paper-default") {
    cfg.name = "paper-default";
    return cfg;
  }
  if (name == "paper-final") {
    cfg.name = "paper-final";
    cfg.evo.population = 2000;
    cfg.evo.batch_size = 1024;
    cfg.evo.p_elite = 0.05;
    cfg.evo.p_crossover = 0.75;
    cfg.evo.p_mutation = 0.20;
    return cfg;
  }
  if (name == "adam") {
    cfg.name = "adam";
    cfg.trainer = TrainerKind::kGradient;
    return cfg;
  }
  if (name == "smoke") {
    // Seconds-scale synthetic task.
    cfg.name = "smoke";
    cfg.evo.population = 40;
    cfg.evo.batch_size = 64;
    cfg.evo.sigma = 0.01;
    cfg.evo.generations = 60;
    cfg.validation_every = 20;
    cfg.network = NetworkSpec{8, 8, false, {16, 4}};
    cfg.data.source = DataSource::kBlobs;
    cfg.data.blob_classes = 4;
    cfg.data.blob_per_class = 150;
    cfg.data.blob_separation = 3.0;
    cfg.data.n_train = 400;
    cfg.data.n_val = 200;
    cfg.repeats = 2;
    return cfg;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

}  // namespace leea
