#include "leea/grad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leea/errors.hpp"
#include "leea/fitness.hpp"
#include "leea/rng.hpp"

namespace leea {

std::string to_string(GradOptimizer opt) { return opt == GradOptimizer::kAdam ? "adam" : "sgd"; }

GradOptimizer parse_grad_optimizer(const std::string& text) {
  if (text == "adam") return GradOptimizer::kAdam;
  if (text == "sgd") return GradOptimizer::kSgd;
  throw ConfigError("unknown optimizer '" + text + "' (adam, sgd)");
}

void GradConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (batch_size < 1) throw ConfigError("gradient batch size must be at least 1");
}

namespace {

struct Activations {
  Tensor features;                         // [b, input_features]
  std::vector<std::vector<float>> layers;  // post-activation per layer; last holds softmax
};

Activations run_forward(const NetworkSpec& spec, std::span<const float> genome,
                        const Tensor& images) {
  if (genome.size() != param_count(spec)) {
    throw DimensionError("genome", "genome has " + std::to_string(genome.size()) +
                                       " values, architecture needs " +
                                       std::to_string(param_count(spec)));
  }
  Activations act;
  act.features = prepare_inputs(spec, images);
  const std::size_t b = act.features.dim(0);
  act.layers.reserve(spec.num_layers());
  MatrixStack input{act.features.data(), 1, b, spec.input_features(), 0};
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const std::size_t units = spec.fan_out(l);
    MatrixStack w{genome.data() + spec.weight_offset(l), 1, units, spec.fan_in(l), 0};
    VectorStack bias{genome.data() + spec.bias_offset(l), 1, units, 0};
    auto& out = act.layers.emplace_back(b * units);
    pop_linear_into(w, bias, input, out);
    if (l + 1 == spec.num_layers()) {
      softmax_rows_inplace(out, units);
    } else {
      relu_inplace(out);
    }
    input = MatrixStack{out.data(), 1, b, units, 0};
  }
  return act;
}

double mean_loss(const std::vector<float>& probs, std::span<const std::uint8_t> labels,
                 std::size_t classes) {
  double total = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    total -= std::log(std::max(static_cast<double>(probs[r * classes + labels[r]]), kProbabilityFloor));
  }
  return labels.empty() ? 0.0 : total / static_cast<double>(labels.size());
}

void check_labels(const Tensor& images, std::span<const std::uint8_t> labels, std::size_t classes) {
  if (images.rank() != 3 || images.dim(0) != labels.size()) {
    throw DimensionError("batch", "images " + to_string(images.shape()) + " do not match " +
                                      std::to_string(labels.size()) + " labels");
  }
  for (auto y : labels) {
    if (y >= classes) throw ValidationError("label out of range");
  }
}

}  // namespace

double cross_entropy_loss(const NetworkSpec& spec, std::span<const float> genome,
                          const Tensor& images, std::span<const std::uint8_t> labels) {
  check_labels(images, labels, spec.num_classes());
  const Activations act = run_forward(spec, genome, images);
  return mean_loss(act.layers.back(), labels, spec.num_classes());
}

LossAndGradient backprop(const NetworkSpec& spec, std::span<const float> genome,
                         const Tensor& images, std::span<const std::uint8_t> labels) {
  check_labels(images, labels, spec.num_classes());
  const Activations act = run_forward(spec, genome, images);
  const std::size_t b = labels.size();
  const std::size_t classes = spec.num_classes();

  LossAndGradient result;
  result.loss = mean_loss(act.layers.back(), labels, classes);
  result.gradient.assign(genome.size(), 0.0f);
  if (b == 0) return result;

  // Softmax followed by cross-entropy: d loss / d logits = (q - onehot) / b.
  const float inv_b = 1.0f / static_cast<float>(b);
  std::vector<float> delta = act.layers.back();
  for (std::size_t r = 0; r < b; ++r) {
    delta[r * classes + labels[r]] -= 1.0f;
  }
  for (auto& d : delta) d *= inv_b;

  for (std::size_t l = spec.num_layers(); l-- > 0;) {
    const std::size_t out = spec.fan_out(l), in = spec.fan_in(l);
    const float* prev = l == 0 ? act.features.data() : act.layers[l - 1].data();
    const float* w = genome.data() + spec.weight_offset(l);
    float* grad_w = result.gradient.data() + spec.weight_offset(l);
    float* grad_b = result.gradient.data() + spec.bias_offset(l);

    for (std::size_t r = 0; r < b; ++r) {
      const float* prev_row = prev + r * in;
      for (std::size_t j = 0; j < out; ++j) {
        const float d = delta[r * out + j];
        grad_b[j] += d;
        if (d == 0.0f) continue;
        float* gw = grad_w + j * in;
        for (std::size_t i = 0; i < in; ++i) gw[i] += d * prev_row[i];
      }
    }
    if (l == 0) break;

    std::vector<float> delta_prev(b * in, 0.0f);
    for (std::size_t r = 0; r < b; ++r) {
      float* dp = delta_prev.data() + r * in;
      for (std::size_t j = 0; j < out; ++j) {
        const float d = delta[r * out + j];
        if (d == 0.0f) continue;
        const float* wr = w + j * in;
        for (std::size_t i = 0; i < in; ++i) dp[i] += d * wr[i];
      }
      const float* prev_row = prev + r * in;
      for (std::size_t i = 0; i < in; ++i) {
        if (prev_row[i] <= 0.0f) dp[i] = 0.0f;
      }
    }
    delta = std::move(delta_prev);
  }
  return result;
}

void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state,
               const GradConfig& cfg) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw DimensionError("parameters", "Adam state, parameters and gradients differ in length");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const auto b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
  const auto step_size = static_cast<float>(cfg.learning_rate / correction1);
  const auto inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(correction2));
  const auto eps = static_cast<float>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const float g = grads[i];
    float& m = state.first_moment[i];
    float& v = state.second_moment[i];
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g * g;
    params[i] -= step_size * m / (std::sqrt(v) * inv_sqrt_c2 + eps);
  }
}

void sgd_step(std::span<float> params, std::span<const float> grads, double learning_rate) {
  if (params.size() != grads.size()) {
    throw DimensionError("parameters", "parameters and gradients differ in length");
  }
  const auto lr = static_cast<float>(learning_rate);
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

GradTrainResult sgd_train(const GradConfig& cfg, const NetworkSpec& spec, const Dataset& train,
                          const Dataset& validation, std::uint64_t seed) {
  cfg.validate();
  const RunStreams streams(seed);
  GradTrainResult result;
  result.network = glorot_uniform_init(spec, 1, streams.seed_for(StreamPurpose::kInit));
  auto params = result.network.genome(0);
  AdamState adam(params.size());

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle = streams.make(StreamPurpose::kShuffle, epoch);
    std::shuffle(order.begin(), order.end(), shuffle);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      const Dataset batch =
          train.subset(std::span<const std::size_t>(order).subspan(start, n));
      const auto lg = backprop(spec, params, batch.images, batch.labels);
      loss_sum += lg.loss * static_cast<double>(n);
      seen += n;
      if (cfg.optimizer == GradOptimizer::kAdam) {
        adam_step(params, lg.gradient, adam, cfg);
      } else {
        sgd_step(params, lg.gradient, cfg.learning_rate);
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    rec.validation_accuracy =
        validation.size() ? full_set_accuracy(result.network, validation).front() : 0.0;
    result.log.push_back(rec);
  }
  return result;
}

}  // namespace leea
