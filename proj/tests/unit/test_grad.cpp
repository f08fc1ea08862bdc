#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "leea/errors.hpp"
#include "leea/fitness.hpp"
#include "leea/grad.hpp"
#include "oracles.hpp"

namespace {

using leea::NetworkSpec;
using leea::Tensor;

// 4 -> 5 -> 3 -> 2, 51 parameters.
NetworkSpec tiny_spec() { return NetworkSpec{1, 4, false, {5, 3, 2}}; }

std::vector<float> random_genome(const NetworkSpec& spec, std::uint64_t seed, float scale = 0.7f) {
  std::vector<float> g(leea::param_count(spec));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-scale, scale);
  for (auto& v : g) v = u(rng);
  return g;
}

std::vector<std::uint8_t> random_labels(std::size_t n, std::size_t classes, std::uint64_t seed) {
  std::vector<std::uint8_t> labels(n);
  std::mt19937_64 rng(seed);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % classes);
  return labels;
}

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale < 1e-8 ? 0.0 : std::abs(a - b) / scale;
}

TEST(Backprop, MatchesFiniteDifferences) {
  const auto spec = tiny_spec();
  const auto genome = random_genome(spec, 1);
  const auto images = oracle::random_tensor({8, 1, 4}, 2);
  const auto labels = random_labels(8, 2, 3);
  const auto lg = leea::backprop(spec, genome, images, labels);
  EXPECT_NEAR(lg.loss, oracle::mean_loss(spec, std::vector<double>(genome.begin(), genome.end()), images, labels), 1e-6);

  std::mt19937_64 rng(4);
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = rng() % genome.size();
    const double fd = oracle::finite_difference(spec, genome, images, labels, c);
    good += relative_error(lg.gradient[c], fd) <= 1e-3;
  }
  EXPECT_GE(good, 19);
}

TEST(Backprop, AllCoordinatesWithPooling) {
  const NetworkSpec spec{4, 4, true, {3, 2}};
  const auto genome = random_genome(spec, 5);
  const auto images = oracle::random_tensor({5, 4, 4}, 6, 0.0f, 1.0f);
  const auto labels = random_labels(5, 2, 7);
  const auto lg = leea::backprop(spec, genome, images, labels);
  for (std::size_t c = 0; c < genome.size(); ++c) {
    const double fd = oracle::finite_difference(spec, genome, images, labels, c);
    EXPECT_LE(relative_error(lg.gradient[c], fd), 1e-3) << "coordinate " << c;
  }
}

TEST(Backprop, ZeroNetworkOutputBiasClosedForm) {
  const auto spec = tiny_spec();
  const std::vector<float> zero(leea::param_count(spec), 0.0f);
  const auto images = oracle::random_tensor({6, 1, 4}, 8);
  const std::vector<std::uint8_t> labels = {0, 1, 1, 1, 0, 1};
  const auto lg = leea::backprop(spec, zero, images, labels);
  EXPECT_NEAR(lg.loss, std::log(2.0), 1e-6);
  const std::size_t bias = spec.bias_offset(2);
  // mean(softmax - onehot) = 1/2 - class frequency
  EXPECT_NEAR(lg.gradient[bias + 0], 0.5 - 2.0 / 6.0, 1e-6);
  EXPECT_NEAR(lg.gradient[bias + 1], 0.5 - 4.0 / 6.0, 1e-6);
}

TEST(Backprop, PooledAwayFeaturesGetNoGradient) {
  const NetworkSpec spec{4, 4, true, {3, 2}};
  const auto genome = random_genome(spec, 9);
  // The top-left 2x2 window is zero in every image, so pooled feature 0 is 0.
  auto images = oracle::random_tensor({4, 4, 4}, 10, 0.1f, 1.0f);
  for (std::size_t n = 0; n < 4; ++n) {
    images(n, 0, 0) = images(n, 0, 1) = images(n, 1, 0) = images(n, 1, 1) = 0.0f;
  }
  const auto lg = leea::backprop(spec, genome, images, random_labels(4, 2, 11));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(lg.gradient[j * 4 + 0], 0.0f);
  EXPECT_NE(lg.gradient[1], 0.0f);
}

TEST(Backprop, BatchGradientIsMeanOfExampleGradients) {
  const auto spec = tiny_spec();
  const auto genome = random_genome(spec, 12);
  const auto images = oracle::random_tensor({7, 1, 4}, 13);
  const auto labels = random_labels(7, 2, 14);
  const auto batch = leea::backprop(spec, genome, images, labels);
  std::vector<double> mean(genome.size(), 0.0);
  for (std::size_t i = 0; i < 7; ++i) {
    const Tensor one({1, 1, 4}, std::vector<float>(images.data() + i * 4, images.data() + i * 4 + 4));
    const std::uint8_t label[] = {labels[i]};
    const auto g = leea::backprop(spec, genome, one, label).gradient;
    for (std::size_t c = 0; c < g.size(); ++c) mean[c] += g[c] / 7.0;
  }
  for (std::size_t c = 0; c < mean.size(); ++c) EXPECT_NEAR(batch.gradient[c], mean[c], 1e-5);
}

TEST(Backprop, GenomeLengthMismatchThrows) {
  EXPECT_THROW(leea::backprop(tiny_spec(), std::vector<float>(3), Tensor({1, 1, 4}), std::vector<std::uint8_t>{0}),
               leea::DimensionError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<float> params = {0.5f, -1.0f, 2.0f};
  const auto before = params;
  leea::AdamState state(3);
  leea::adam_step(params, std::vector<float>(3, 0.0f), state, leea::GradConfig{});
  EXPECT_EQ(params, before);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<float> params = {0.0f, 1.0f, -3.0f};
  leea::AdamState state(3);
  leea::GradConfig cfg;
  leea::adam_step(params, std::vector<float>{0.3f, -2.0f, 50.0f}, state, cfg);
  EXPECT_NEAR(params[0], -cfg.learning_rate, 1e-7);
  EXPECT_NEAR(params[1], 1.0 + cfg.learning_rate, 1e-7);
  EXPECT_NEAR(params[2], -3.0 - cfg.learning_rate, 1e-7);
}

TEST(Adam, MatchesDoubleOracleOverTenSteps) {
  leea::GradConfig cfg;
  cfg.learning_rate = 0.01;
  std::mt19937_64 rng(15);
  std::normal_distribution<float> nd(0.0f, 1.0f);
  std::vector<float> params(20);
  for (auto& p : params) p = nd(rng);
  std::vector<double> ref(params.begin(), params.end()), m(20, 0.0), v(20, 0.0);
  leea::AdamState state(20);
  for (int t = 1; t <= 10; ++t) {
    std::vector<float> g(20);
    for (auto& x : g) x = nd(rng);
    leea::adam_step(params, g, state, cfg);
    for (std::size_t i = 0; i < 20; ++i) {
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * static_cast<double>(g[i]) * g[i];
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, t));
      ref[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
    }
  }
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(params[i], ref[i], 1e-6);
}

TEST(Adam, SmallStepLowersBatchLoss) {
  const auto spec = tiny_spec();
  leea::GradConfig cfg;
  cfg.learning_rate = 1e-4;
  int lowered = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    auto genome = random_genome(spec, 100 + trial);
    const auto images = oracle::random_tensor({16, 1, 4}, 200 + trial);
    const auto labels = random_labels(16, 2, 300 + trial);
    const auto lg = leea::backprop(spec, genome, images, labels);
    leea::AdamState state(genome.size());
    leea::adam_step(genome, lg.gradient, state, cfg);
    lowered += leea::cross_entropy_loss(spec, genome, images, labels) < lg.loss;
  }
  EXPECT_GE(lowered, 95);
}

TEST(SgdTrain, ZeroLearningRateKeepsInitialization) {
  const NetworkSpec spec{4, 4, false, {6, 3}};
  leea::Dataset data;
  data.images = oracle::random_tensor({30, 4, 4}, 16, 0.0f, 1.0f);
  data.labels = random_labels(30, 3, 17);
  data.num_classes = 3;
  leea::GradConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  const auto result = leea::sgd_train(cfg, spec, data, data, 5);
  const auto init = leea::glorot_uniform_init(spec, 1, leea::RunStreams(5).seed_for(leea::StreamPurpose::kInit));
  EXPECT_EQ(result.network, init);
  ASSERT_EQ(result.log.size(), 1u);
  EXPECT_EQ(result.log[0].epoch, 1u);
}

TEST(SgdTrain, OverfitsTwoHundredImages) {
  const auto spec = NetworkSpec::mnist();
  leea::Dataset data;
  data.images = oracle::random_tensor({200, 28, 28}, 18, 0.0f, 1.0f);
  data.labels = random_labels(200, 10, 19);
  leea::GradConfig cfg;
  cfg.batch_size = 32;
  cfg.epochs = 200;
  const auto result = leea::sgd_train(cfg, spec, data, data, 7);
  EXPECT_EQ(leea::full_set_accuracy(result.network, data).front(), 1.0);
  EXPECT_LT(result.log.back().train_loss, result.log.front().train_loss);
}

TEST(SgdTrain, PlainSgdAlsoLearns) {
  const NetworkSpec spec{4, 4, false, {16, 3}};
  leea::BlobSpec blobs;
  blobs.classes = 3;
  blobs.rows = 4;
  blobs.cols = 4;
  blobs.per_class = 50;
  blobs.separation = 6.0;
  const auto data = leea::synthetic_blobs(blobs, 3);
  leea::GradConfig cfg;
  cfg.optimizer = leea::GradOptimizer::kSgd;
  cfg.learning_rate = 0.1;
  cfg.epochs = 30;
  cfg.batch_size = 16;
  const auto result = leea::sgd_train(cfg, spec, data, data, 1);
  EXPECT_GT(result.log.back().validation_accuracy, 0.9);
}

}  // namespace
