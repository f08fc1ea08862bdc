#include "leea/evo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/random/normal_distribution.hpp>

#include "leea/errors.hpp"
#include "leea/parallel.hpp"

namespace leea {

std::string to_string(SigmaMode mode) {
  switch (mode) {
    case SigmaMode::kConstant: return "constant";
    case SigmaMode::kExpDecay: return "exp_decay";
    case SigmaMode::kSelfAdaptive: return "self_adaptive";
  }
  return "?";
}

std::string to_string(CrossoverOp op) {
  return op == CrossoverOp::kUniform ? "uniform" : "arithmetic";
}

SigmaMode parse_sigma_mode(const std::string& text) {
  if (text == "constant") return SigmaMode::kConstant;
  if (text == "exp_decay") return SigmaMode::kExpDecay;
  if (text == "self_adaptive") return SigmaMode::kSelfAdaptive;
  throw ConfigError("unknown sigma mode '" + text + "' (constant, exp_decay, self_adaptive)");
}

CrossoverOp parse_crossover_op(const std::string& text) {
  if (text == "uniform") return CrossoverOp::kUniform;
  if (text == "arithmetic") return CrossoverOp::kArithmetic;
  throw ConfigError("unknown crossover operator '" + text + "' (uniform, arithmetic)");
}

void EvoConfig::validate() const {
  auto fraction = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
  };
  fraction(p_elite, "p_elite");
  fraction(p_crossover, "p_crossover");
  fraction(p_mutation, "p_mutation");
  if (std::abs(p_elite + p_crossover + p_mutation - 1.0) > 1e-9) {
    throw ConfigError("p_elite + p_crossover + p_mutation must equal 1");
  }
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  fraction(alpha, "alpha");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
  if (population < 2) throw ConfigError("population must be at least 2");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(decay_k > 0.0)) throw ConfigError("decay_k must be positive");
  if (!(tau >= 0.0)) throw ConfigError("tau must be non-negative");
}

OffspringCounts offspring_counts(const EvoConfig& cfg) {
  const auto lambda = static_cast<double>(cfg.population);
  const auto elites = static_cast<long long>(std::llround(cfg.p_elite * lambda));
  const auto crossover = static_cast<long long>(std::llround(cfg.p_crossover * lambda));
  const long long mutation = static_cast<long long>(cfg.population) - elites - crossover;
  if (mutation < 0) {
    throw ConfigError("offspring fractions round to more than the population size");
  }
  return {static_cast<std::size_t>(elites), static_cast<std::size_t>(crossover),
          static_cast<std::size_t>(mutation)};
}

std::size_t parent_pool_size(std::size_t population, double rho) {
  const auto pool = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(population) - 1e-9));
  return std::clamp<std::size_t>(pool, 1, population);
}

std::vector<std::size_t> truncation_select(std::size_t pool, std::size_t count, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = pick(rng);
  return out;
}

std::vector<std::size_t> rank_by_fitness(std::span<const double> fitness) {
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
  return order;
}

namespace {

void require_same_length(std::size_t a, std::size_t b, std::size_t out) {
  if (a != b || a != out) {
    throw DimensionError("genome", "genome lengths differ: " + std::to_string(a) + ", " +
                                       std::to_string(b) + ", output " + std::to_string(out));
  }
}

}  // namespace

void uniform_crossover(std::span<const float> first, std::span<const float> second,
                       std::span<float> out, Rng& rng) {
  require_same_length(first.size(), second.size(), out.size());
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i % 64 == 0) bits = rng();
    out[i] = (bits & 1u) ? first[i] : second[i];
    bits >>= 1;
  }
}

void arithmetic_crossover(std::span<const float> first, std::span<const float> second,
                          std::span<float> out) {
  require_same_length(first.size(), second.size(), out.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5f * (first[i] + second[i]);
}

void mutate(std::span<const float> parent, float sigma, std::span<float> out, Rng& rng) {
  require_same_length(parent.size(), parent.size(), out.size());
  if (sigma == 0.0f) {
    std::copy(parent.begin(), parent.end(), out.begin());
    return;
  }
  // Ziggurat sampler; about twice as fast as std::normal_distribution here.
  boost::random::normal_distribution<float> normal(0.0f, 1.0f);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = parent[i] + sigma * normal(rng);
}

double sigma_schedule(const EvoConfig& cfg, std::size_t generation) {
  if (cfg.sigma_mode == SigmaMode::kExpDecay) {
    return cfg.sigma * std::pow(0.99, static_cast<double>(generation) / cfg.decay_k);
  }
  return cfg.sigma;
}

float self_adapt_sigma(float sigma, double tau, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double next = static_cast<double>(sigma) * std::exp(tau * normal(rng));
  return std::max(static_cast<float>(next), kSigmaFloor);
}

EvalState initialize(const EvoConfig& cfg, const NetworkSpec& spec, const Batch& batch,
                     const RunStreams& streams) {
  cfg.validate();
  EvalState state;
  state.population = glorot_uniform_init(spec, cfg.population, streams.seed_for(StreamPurpose::kInit));
  if (cfg.sigma_mode == SigmaMode::kSelfAdaptive) {
    state.population.sigma_genes() = std::vector<float>(cfg.population, static_cast<float>(cfg.sigma));
  }
  state.raw = evaluate_population(state.population, batch);
  state.adjusted = state.raw;
  state.generation = 0;
  return state;
}

namespace {

enum class Origin { kElite, kCrossover, kMutation };

struct OffspringPlan {
  Origin origin;
  std::size_t first;
  std::size_t second;
};

}  // namespace

EvalState step(const EvalState& state, const Batch& batch, const EvoConfig& cfg,
               const RunStreams& streams) {
  const std::size_t lambda = cfg.population;
  if (state.population.size() != lambda || state.adjusted.size() != lambda) {
    throw DimensionError("population", "state holds " + std::to_string(state.population.size()) +
                                           " individuals, config expects " + std::to_string(lambda));
  }
  const auto order = rank_by_fitness(state.adjusted);
  const auto counts = offspring_counts(cfg);
  const std::size_t pool = parent_pool_size(lambda, cfg.rho);
  const std::uint64_t next_generation = state.generation + 1;

  // Selection is drawn serially from one stream; variation below uses one
  // stream per offspring slot, so it can run in any order.
  Rng selection = streams.make(StreamPurpose::kSelection, next_generation);
  const auto crossover_ranks = truncation_select(pool, 2 * counts.crossover, selection);
  const auto mutation_ranks = truncation_select(pool, counts.mutation, selection);

  std::vector<OffspringPlan> plan;
  plan.reserve(lambda);
  for (std::size_t e = 0; e < counts.elites; ++e) plan.push_back({Origin::kElite, order[e], order[e]});
  for (std::size_t c = 0; c < counts.crossover; ++c) {
    plan.push_back({Origin::kCrossover, order[crossover_ranks[2 * c]], order[crossover_ranks[2 * c + 1]]});
  }
  for (std::size_t m = 0; m < counts.mutation; ++m) {
    plan.push_back({Origin::kMutation, order[mutation_ranks[m]], order[mutation_ranks[m]]});
  }

  const PopulationParams& parents = state.population;
  const bool adaptive = cfg.sigma_mode == SigmaMode::kSelfAdaptive;
  const float scheduled_sigma = static_cast<float>(sigma_schedule(cfg, state.generation));

  EvalState next;
  next.population = PopulationParams(parents.spec(), lambda);
  if (adaptive) next.population.sigma_genes() = std::vector<float>(lambda);
  std::vector<double> inherited(lambda);
  const std::vector<float>* parent_sigma = adaptive ? &*parents.sigma_genes() : nullptr;
  std::vector<float>* child_sigma = adaptive ? &*next.population.sigma_genes() : nullptr;

  parallel_for(lambda, [&](std::size_t begin, std::size_t end) {
    for (std::size_t slot = begin; slot < end; ++slot) {
      const OffspringPlan& p = plan[slot];
      auto child = next.population.genome(slot);
      auto first = parents.genome(p.first);
      switch (p.origin) {
        case Origin::kElite:
          std::copy(first.begin(), first.end(), child.begin());
          inherited[slot] = state.adjusted[p.first];
          if (adaptive) (*child_sigma)[slot] = (*parent_sigma)[p.first];
          break;
        case Origin::kCrossover: {
          auto second = parents.genome(p.second);
          if (cfg.crossover == CrossoverOp::kUniform) {
            Rng rng = streams.make(StreamPurpose::kCrossover, next_generation, slot);
            uniform_crossover(first, second, child, rng);
          } else {
            arithmetic_crossover(first, second, child);
          }
          inherited[slot] = inherited_fitness(state.adjusted[p.first], state.adjusted[p.second]);
          if (adaptive) {
            (*child_sigma)[slot] = 0.5f * ((*parent_sigma)[p.first] + (*parent_sigma)[p.second]);
          }
          break;
        }
        case Origin::kMutation: {
          float sigma = scheduled_sigma;
          if (adaptive) {
            Rng rng = streams.make(StreamPurpose::kSelfAdaptation, next_generation, slot);
            sigma = self_adapt_sigma((*parent_sigma)[p.first], cfg.tau, rng);
            (*child_sigma)[slot] = sigma;
          }
          Rng rng = streams.make(StreamPurpose::kMutation, next_generation, slot);
          mutate(first, sigma, child, rng);
          inherited[slot] = inherited_fitness(state.adjusted[p.first]);
          break;
        }
      }
    }
  });

  next.raw = evaluate_population(next.population, batch);
  next.adjusted.resize(lambda);
  for (std::size_t k = 0; k < lambda; ++k) {
    next.adjusted[k] = adjusted_fitness(inherited[k], next.raw[k], cfg.alpha);
  }
  next.generation = next_generation;
  return next;
}

SigmaStats sigma_stats(const EvalState& state, const EvoConfig& cfg) {
  const auto& genes = state.population.sigma_genes();
  if (!genes || genes->empty()) return {sigma_schedule(cfg, state.generation), 0.0};
  double sum = 0.0;
  for (float s : *genes) sum += s;
  const double mean = sum / static_cast<double>(genes->size());
  double sq = 0.0;
  for (float s : *genes) sq += (s - mean) * (s - mean);
  return {mean, std::sqrt(sq / static_cast<double>(genes->size()))};
}

}  // namespace leea
