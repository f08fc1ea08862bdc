#include "leea/fitness.hpp"

#include <algorithm>
#include <cmath>

#include "leea/errors.hpp"

namespace leea {

void validate_one_hot(const Tensor& labels) {
  if (labels.rank() != 2) {
    throw DimensionError("rank", "labels must be [b, d], got " + to_string(labels.shape()));
  }
  const std::size_t b = labels.dim(0), d = labels.dim(1);
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const float v = labels(i, j);
      if (v == 1.0f) {
        ++ones;
      } else if (v != 0.0f) {
        throw ValidationError("label row " + std::to_string(i) + " is not one-hot");
      }
    }
    if (ones != 1) throw ValidationError("label row " + std::to_string(i) + " is not one-hot");
  }
}

double cross_entropy_fitness(std::span<const float> predictions, const Tensor& one_hot_labels) {
  const std::size_t n = one_hot_labels.dim(0), d = one_hot_labels.dim(1);
  if (predictions.size() != n * d) {
    throw DimensionError("batch", "prediction buffer does not match labels " +
                                      to_string(one_hot_labels.shape()));
  }
  if (n == 0) return 0.0;
  const float* label = one_hot_labels.data();
  double total = 0.0;
  for (std::size_t e = 0; e < n * d; ++e) {
    if (label[e] != 0.0f) {
      const double q = std::max(static_cast<double>(predictions[e]), kProbabilityFloor);
      total += static_cast<double>(label[e]) * std::log(q);
    }
  }
  return total / static_cast<double>(n * d);
}

FitnessVector cross_entropy_fitness(const Tensor& predictions, const Tensor& one_hot_labels) {
  if (one_hot_labels.rank() != 2) {
    throw DimensionError("rank", "labels must be [b, d], got " + to_string(one_hot_labels.shape()));
  }
  if (predictions.rank() != 3) {
    throw DimensionError("rank", "predictions must be [p, n, d], got " + to_string(predictions.shape()));
  }
  if (predictions.dim(1) != one_hot_labels.dim(0)) {
    throw DimensionError("batch", "prediction batch " + std::to_string(predictions.dim(1)) +
                                      " does not match label batch " +
                                      std::to_string(one_hot_labels.dim(0)));
  }
  if (predictions.dim(2) != one_hot_labels.dim(1)) {
    throw DimensionError("class", "prediction classes " + std::to_string(predictions.dim(2)) +
                                      " do not match label classes " +
                                      std::to_string(one_hot_labels.dim(1)));
  }
  validate_one_hot(one_hot_labels);
  const std::size_t p = predictions.dim(0);
  const std::size_t slice = predictions.dim(1) * predictions.dim(2);
  FitnessVector out(p);
  for (std::size_t k = 0; k < p; ++k) {
    out[k] = cross_entropy_fitness(predictions.values().subspan(k * slice, slice), one_hot_labels);
  }
  return out;
}

std::size_t argmax(std::span<const float> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

namespace {

std::size_t count_correct(std::span<const float> predictions, std::span<const std::uint8_t> labels,
                          std::size_t classes) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (argmax(predictions.subspan(i * classes, classes)) == labels[i]) ++correct;
  }
  return correct;
}

// Individuals per forward slice so that one layer's activations stay around 16M floats.
std::size_t population_slice(const NetworkSpec& spec, std::size_t batch) {
  const std::size_t widest = *std::max_element(spec.layer_units.begin(), spec.layer_units.end());
  const std::size_t per_individual = std::max<std::size_t>(1, batch * widest);
  return std::max<std::size_t>(1, (std::size_t{1} << 24) / per_individual);
}

}  // namespace

std::vector<double> accuracy(const Tensor& predictions, std::span<const std::uint8_t> labels) {
  if (predictions.rank() != 3 || predictions.dim(1) != labels.size()) {
    throw DimensionError("batch", "predictions " + to_string(predictions.shape()) +
                                      " do not match " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t p = predictions.dim(0), classes = predictions.dim(2);
  const std::size_t slice = labels.size() * classes;
  std::vector<double> out(p, 0.0);
  if (labels.empty()) return out;
  for (std::size_t k = 0; k < p; ++k) {
    out[k] = static_cast<double>(count_correct(predictions.values().subspan(k * slice, slice),
                                               labels, classes)) /
             static_cast<double>(labels.size());
  }
  return out;
}

FitnessVector evaluate_population(const PopulationParams& params, const Batch& batch) {
  const NetworkSpec& spec = params.spec();
  const Tensor features = prepare_inputs(spec, batch.images);
  const std::size_t b = features.dim(0), classes = spec.num_classes();
  const std::size_t slice = population_slice(spec, b);

  FitnessVector out(params.size());
  std::vector<float> probs;
  for (std::size_t first = 0; first < params.size(); first += slice) {
    const std::size_t count = std::min(slice, params.size() - first);
    probs.resize(count * b * classes);
    forward_range(params, first, count, features, probs);
    for (std::size_t k = 0; k < count; ++k) {
      out[first + k] = cross_entropy_fitness(
          std::span<const float>(probs).subspan(k * b * classes, b * classes), batch.one_hot);
    }
  }
  return out;
}

std::vector<double> full_set_accuracy(const PopulationParams& params, const Dataset& data,
                                      std::size_t chunk) {
  chunk = std::max<std::size_t>(chunk, 1);
  const NetworkSpec& spec = params.spec();
  const std::size_t classes = spec.num_classes();
  std::vector<std::size_t> correct(params.size(), 0);
  std::vector<float> probs;
  std::vector<std::size_t> indices;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t n = std::min(chunk, data.size() - start);
    indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = start + i;
    const Dataset part = data.subset(indices);
    const Tensor features = prepare_inputs(spec, part.images);
    const std::size_t slice = population_slice(spec, n);
    for (std::size_t first = 0; first < params.size(); first += slice) {
      const std::size_t count = std::min(slice, params.size() - first);
      probs.resize(count * n * classes);
      forward_range(params, first, count, features, probs);
      for (std::size_t k = 0; k < count; ++k) {
        correct[first + k] += count_correct(
            std::span<const float>(probs).subspan(k * n * classes, n * classes), part.labels, classes);
      }
    }
  }
  std::vector<double> out(params.size(), 0.0);
  if (data.size() == 0) return out;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = static_cast<double>(correct[k]) / static_cast<double>(data.size());
  }
  return out;
}

}  // namespace leea
