#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leea/data.hpp"
#include "leea/fitness.hpp"
#include "leea/model.hpp"
#include "leea/rng.hpp"

namespace leea {

enum class SigmaMode { kConstant, kExpDecay, kSelfAdaptive };
enum class CrossoverOp { kUniform, kArithmetic };

std::string to_string(SigmaMode mode);
std::string to_string(CrossoverOp op);
SigmaMode parse_sigma_mode(const std::string& text);
CrossoverOp parse_crossover_op(const std::string& text);

/// Hyperparameters of the limited-evaluation EA. Defaults are the standard
/// experiment settings (population 1000, batch 512, uniform crossover,
/// constant sigma 0.001).
struct EvoConfig {
  std::size_t population = 1000;
  double p_elite = 0.05;
  double p_crossover = 0.50;
  double p_mutation = 0.45;
  /// Parents are drawn from the top ceil(rho * population) individuals.
  double rho = 0.50;
  /// Weight of the fresh batch evaluation; 1 disables fitness inheritance.
  double alpha = 1.0;
  double sigma = 0.001;
  SigmaMode sigma_mode = SigmaMode::kConstant;
  /// Generations per 0.99 decay factor in exp-decay mode.
  double decay_k = 100.0;
  /// Learning rate of the log-normal sigma update in self-adaptive mode.
  double tau = 0.1;
  CrossoverOp crossover = CrossoverOp::kUniform;
  std::size_t batch_size = 512;
  bool batch_with_replacement = false;
  std::size_t generations = 1000;

  /// Throws ConfigError on violated invariants.
  void validate() const;

  bool operator==(const EvoConfig&) const = default;
};

struct OffspringCounts {
  std::size_t elites = 0;
  std::size_t crossover = 0;
  std::size_t mutation = 0;

  bool operator==(const OffspringCounts&) const = default;
};

/// round(p_E * lambda) elites, round(p_C * lambda) crossover offspring, the
/// remainder by mutation.
OffspringCounts offspring_counts(const EvoConfig& cfg);

/// ceil(rho * lambda), at least 1 and at most lambda.
std::size_t parent_pool_size(std::size_t population, double rho);

/// `count` ranks drawn i.i.d. uniform from [0, pool).
std::vector<std::size_t> truncation_select(std::size_t pool, std::size_t count, Rng& rng);

/// Indices sorted by fitness descending; equal fitness keeps the lower index first.
std::vector<std::size_t> rank_by_fitness(std::span<const double> fitness);

// Genome operators. `out` must not alias the parents.

/// Each gene independently from `first` or `second` with probability 1/2.
void uniform_crossover(std::span<const float> first, std::span<const float> second,
                       std::span<float> out, Rng& rng);
void arithmetic_crossover(std::span<const float> first, std::span<const float> second,
                          std::span<float> out);
/// out = parent + sigma * z, z standard normal per gene.
void mutate(std::span<const float> parent, float sigma, std::span<float> out, Rng& rng);

/// Deterministic sigma for generation i: constant, or sigma * 0.99^(i/k).
/// In self-adaptive mode this is the initial gene value.
double sigma_schedule(const EvoConfig& cfg, std::size_t generation);

inline constexpr float kSigmaFloor = 1e-8f;

/// sigma * exp(tau * N(0,1)), floored at kSigmaFloor.
float self_adapt_sigma(float sigma, double tau, Rng& rng);

inline double adjusted_fitness(double inherited, double raw, double alpha) {
  return (1.0 - alpha) * inherited + alpha * raw;
}
inline double inherited_fitness(double parent) { return parent; }
inline double inherited_fitness(double first, double second) { return 0.5 * (first + second); }

/// Population with its adjusted fitness. `generation` counts completed
/// evaluations; the initial population is generation 0.
struct EvalState {
  PopulationParams population;
  FitnessVector adjusted;
  /// Fitness from the most recent batch evaluation, before inheritance.
  FitnessVector raw;
  std::size_t generation = 0;
};

/// Glorot-initialized population evaluated on `batch`; adjusted = raw.
EvalState initialize(const EvoConfig& cfg, const NetworkSpec& spec, const Batch& batch,
                     const RunStreams& streams);

/// One generation: rank by adjusted fitness, copy elites, breed crossover and
/// mutation offspring from the top rho*lambda, evaluate everyone on `batch`
/// and blend with inherited fitness. Elites inherit their own previous
/// adjusted fitness.
EvalState step(const EvalState& state, const Batch& batch, const EvoConfig& cfg,
               const RunStreams& streams);

/// Current sigma summary: mean and std of the sigma genes in self-adaptive
/// mode, otherwise the scheduled value with zero spread.
struct SigmaStats {
  double mean = 0.0;
  double stddev = 0.0;
};
SigmaStats sigma_stats(const EvalState& state, const EvoConfig& cfg);

}  // namespace leea
