#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "leea/data.hpp"
#include "leea/model.hpp"
#include "leea/tensor.hpp"

namespace leea {

/// One value per individual. Higher is better.
using FitnessVector = std::vector<double>;

/// Lower clamp applied to predicted probabilities before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

/// Throws ValidationError unless every row of `labels` [b, d] is one-hot.
void validate_one_hot(const Tensor& labels);

/// Negative average cross-entropy, normalized by batch size and class count:
///   f_k = 1/(n d) * sum_i sum_j p_ij log(max(q_kij, floor))
/// predictions [p, n, d], one-hot labels [n, d]. Always <= 0.
FitnessVector cross_entropy_fitness(const Tensor& predictions, const Tensor& one_hot_labels);

/// Same quantity for a single individual's outputs [n, d] in a raw buffer.
double cross_entropy_fitness(std::span<const float> predictions, const Tensor& one_hot_labels);

/// Index of the largest entry; ties go to the lowest class index.
std::size_t argmax(std::span<const float> row);

/// Fraction of rows whose argmax equals the label, per individual.
std::vector<double> accuracy(const Tensor& predictions, std::span<const std::uint8_t> labels);

/// Fitness of every individual on one batch. The forward pass is run over
/// slices of the population to bound activation memory; slicing does not
/// change any value.
FitnessVector evaluate_population(const PopulationParams& params, const Batch& batch);

/// Accuracy of every individual on a whole dataset, `chunk` images at a time.
std::vector<double> full_set_accuracy(const PopulationParams& params, const Dataset& data,
                                      std::size_t chunk = 1000);

}  // namespace leea
