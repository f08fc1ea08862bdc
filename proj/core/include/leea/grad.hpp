#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leea/data.hpp"
#include "leea/model.hpp"

namespace leea {

enum class GradOptimizer { kAdam, kSgd };

std::string to_string(GradOptimizer opt);
GradOptimizer parse_grad_optimizer(const std::string& text);

/// Gradient-descent baseline settings. Adam defaults follow the optimizer's
/// published defaults.
struct GradConfig {
  GradOptimizer optimizer = GradOptimizer::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 128;
  std::size_t epochs = 20;

  void validate() const;
  bool operator==(const GradConfig&) const = default;
};

struct LossAndGradient {
  /// Mean cross-entropy over the batch.
  double loss = 0.0;
  /// d loss / d parameters in the flat genome layout.
  std::vector<float> gradient;
};

/// Mean cross-entropy loss of one network on a batch and its gradient,
/// through softmax, the dense layers and the ReLU masks. Pooling has no
/// parameters, so gradients stop at the pooled features.
LossAndGradient backprop(const NetworkSpec& spec, std::span<const float> genome,
                         const Tensor& images, std::span<const std::uint8_t> labels);

/// Mean cross-entropy loss only.
double cross_entropy_loss(const NetworkSpec& spec, std::span<const float> genome,
                          const Tensor& images, std::span<const std::uint8_t> labels);

struct AdamState {
  std::vector<float> first_moment;
  std::vector<float> second_moment;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t parameters = 0)
      : first_moment(parameters, 0.0f), second_moment(parameters, 0.0f) {}
};

/// Bias-corrected Adam update in place.
void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state,
               const GradConfig& cfg);

void sgd_step(std::span<float> params, std::span<const float> grads, double learning_rate);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct GradTrainResult {
  PopulationParams network;
  std::vector<EpochRecord> log;
};

/// Glorot-initialized network trained with shuffled mini-batches; validation
/// accuracy is measured after every epoch.
GradTrainResult sgd_train(const GradConfig& cfg, const NetworkSpec& spec, const Dataset& train,
                          const Dataset& validation, std::uint64_t seed);

}  // namespace leea
