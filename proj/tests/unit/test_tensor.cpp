#include <gtest/gtest.h>

#include <cmath>
#include <chrono>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "leea/errors.hpp"
#include "leea/parallel.hpp"
#include "leea/tensor.hpp"
#include "oracles.hpp"

namespace {

using leea::Tensor;

TEST(PopLinear, IdentityWeights) {
  const Tensor w({1, 2, 2}, {1, 0, 0, 1});
  const Tensor b({1, 2});
  const Tensor x({1, 1, 2}, {0.3f, 0.7f});
  const Tensor out = leea::pop_linear(w, b, x);
  EXPECT_EQ(out.shape(), (leea::Shape{1, 1, 2}));
  EXPECT_FLOAT_EQ(out[0], 0.3f);
  EXPECT_FLOAT_EQ(out[1], 0.7f);
}

TEST(PopLinear, ScalarProductPerPopulationSlot) {
  const Tensor w({2, 1, 1}, {2, 3});
  const Tensor b({2, 1});
  const Tensor x({2, 1, 1}, {5, 5});
  const Tensor out = leea::pop_linear(w, b, x);
  EXPECT_EQ(out, Tensor({2, 1, 1}, {10, 15}));
}

TEST(PopLinear, MatchesLoopOracle) {
  const auto w = oracle::random_tensor({3, 5, 6}, 1);
  const auto b = oracle::random_tensor({3, 5}, 2);
  const auto x = oracle::random_tensor({3, 4, 6}, 3);
  const auto out = leea::pop_linear(w, b, x);
  const auto ref = oracle::pop_linear(w, b, x);
  ASSERT_EQ(out.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-5) << i;
}

TEST(PopLinear, RandomShapesMatchPerIndividualProducts) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> pd(1, 8), bd(1, 16), md(1, 32);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = pd(rng), b = bd(rng), n = md(rng), m = md(rng);
    const auto w = oracle::random_tensor({p, n, m}, rng());
    const auto bias = oracle::random_tensor({p, n}, rng());
    const auto x = oracle::random_tensor({p, b, m}, rng());
    const auto out = leea::pop_linear(w, bias, x);
    const auto ref = oracle::pop_linear(w, bias, x);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      ASSERT_NEAR(out[i], ref[i], 1e-5) << "p=" << p << " b=" << b << " n=" << n << " m=" << m;
    }
  }
}

TEST(PopLinear, SharedInputEqualsReplicatedInput) {
  const std::size_t p = 5, b = 7, n = 9, m = 13;
  const auto w = oracle::random_tensor({p, n, m}, 4);
  const auto bias = oracle::random_tensor({p, n}, 5);
  const auto x = oracle::random_tensor({b, m}, 6);
  Tensor replicated({p, b, m});
  for (std::size_t k = 0; k < p; ++k) {
    std::copy(x.values().begin(), x.values().end(), replicated.data() + k * b * m);
  }
  EXPECT_EQ(leea::pop_linear_shared(w, bias, x), leea::pop_linear(w, bias, replicated));
}

// Each output element must come out bit-identical whether its row is
// computed inside a block or on its own.
TEST(PopLinear, BlockingDoesNotChangeBits) {
  const std::size_t p = 3, b = 11, n = 7, m = 29;
  const auto w = oracle::random_tensor({p, n, m}, 7);
  const auto bias = oracle::random_tensor({p, n}, 8);
  const auto x = oracle::random_tensor({b, m}, 9);
  const auto all = leea::pop_linear_shared(w, bias, x);
  for (std::size_t i = 0; i < b; ++i) {
    const Tensor row({1, m}, std::vector<float>(x.data() + i * m, x.data() + (i + 1) * m));
    const auto one = leea::pop_linear_shared(w, bias, row);
    for (std::size_t k = 0; k < p; ++k) {
      for (std::size_t j = 0; j < n; ++j) ASSERT_EQ(one(k, 0, j), all(k, i, j));
    }
  }
}

TEST(PopLinear, BitIdenticalAcrossWorkerCounts) {
  const auto w = oracle::random_tensor({16, 40, 100}, 10);
  const auto bias = oracle::random_tensor({16, 40}, 11);
  const auto x = oracle::random_tensor({70, 100}, 12);
  leea::set_worker_count(1);
  const auto serial = leea::pop_linear_shared(w, bias, x);
  leea::set_worker_count(4);
  const auto parallel = leea::pop_linear_shared(w, bias, x);
  leea::set_worker_count(0);
  EXPECT_EQ(serial, parallel);
}

TEST(PopLinear, DimensionErrorsNameTheAxis) {
  const Tensor w({2, 3, 4}), b({2, 3});
  auto axis_of = [](auto&& fn) {
    try {
      fn();
    } catch (const leea::DimensionError& e) {
      return e.axis();
    }
    return std::string("none");
  };
  EXPECT_EQ(axis_of([&] { leea::pop_linear(w, b, Tensor({3, 1, 4})); }), "population");
  EXPECT_EQ(axis_of([&] { leea::pop_linear(w, b, Tensor({2, 1, 5})); }), "inner");
  EXPECT_EQ(axis_of([&] { leea::pop_linear(w, Tensor({2, 2}), Tensor({2, 1, 4})); }), "output");
  EXPECT_EQ(axis_of([&] { leea::pop_linear(w, b, Tensor({2, 4})); }), "rank");
}

TEST(Relu, Examples) {
  EXPECT_EQ(leea::relu(Tensor({3}, {-1, 0, 2})), Tensor({3}, {0, 0, 2}));
  const auto pos = oracle::random_tensor({4, 5}, 13, 0.0f, 3.0f);
  EXPECT_EQ(leea::relu(pos), pos);
}

TEST(Relu, MatchesElementwiseOracle) {
  const auto x = oracle::random_tensor({6, 7, 8}, 14);
  const auto y = leea::relu(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i] > 0 ? x[i] : 0.0f);
}

TEST(MaxPool, Examples) {
  EXPECT_EQ(leea::maxpool2x2(Tensor({1, 2, 2}, {1, 2, 3, 4})), Tensor({1, 1, 1}, {4}));
  EXPECT_EQ(leea::maxpool2x2(Tensor({2, 6, 4}, 0.25f)), Tensor({2, 3, 2}, 0.25f));
}

TEST(MaxPool, MatchesWindowOracle) {
  const auto x = oracle::random_tensor({3, 28, 28}, 15);
  const auto y = leea::maxpool2x2(x);
  ASSERT_EQ(y.shape(), (leea::Shape{3, 14, 14}));
  for (std::size_t n = 0; n < 3; ++n) {
    for (std::size_t r = 0; r < 14; ++r) {
      for (std::size_t c = 0; c < 14; ++c) {
        float best = -INFINITY;
        for (std::size_t dr = 0; dr < 2; ++dr) {
          for (std::size_t dc = 0; dc < 2; ++dc) best = std::max(best, x(n, 2 * r + dr, 2 * c + dc));
        }
        EXPECT_EQ(y(n, r, c), best);
      }
    }
  }
}

TEST(MaxPool, OddExtentsThrow) {
  EXPECT_THROW(leea::maxpool2x2(Tensor({1, 3, 4})), leea::DimensionError);
  EXPECT_THROW(leea::maxpool2x2(Tensor({1, 4, 5})), leea::DimensionError);
}

TEST(Softmax, ZerosGiveUniform) {
  const auto y = leea::softmax(Tensor({10}));
  for (float v : y.values()) EXPECT_NEAR(v, 0.1f, 1e-7);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const auto y = leea::softmax(Tensor({2}, {1000, 0}));
  EXPECT_FLOAT_EQ(y[0], 1.0f);
  EXPECT_GT(y[1], 0.0f);
  EXPECT_LT(y[1], 1e-30f);
  EXPECT_TRUE(leea::all_finite(y));
}

TEST(Softmax, MatchesDoubleOracleAndSumsToOne) {
  const auto x = oracle::random_tensor({50, 10}, 16, -8.0f, 8.0f);
  const auto y = leea::softmax(x);
  for (std::size_t r = 0; r < 50; ++r) {
    const auto ref = oracle::softmax(std::vector<double>(x.data() + r * 10, x.data() + r * 10 + 10));
    double total = 0.0;
    for (std::size_t j = 0; j < 10; ++j) {
      EXPECT_NEAR(y(r, j), ref[j], 1e-6);
      EXPECT_GT(y(r, j), 0.0f);
      EXPECT_LE(y(r, j), 1.0f);
      total += y(r, j);
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Softmax, ShiftInvariant) {
  auto x = oracle::random_tensor({20, 7}, 17, -5.0f, 5.0f);
  const auto before = leea::softmax(x);
  for (auto& v : x.values()) v += 3.5f;
  const auto after = leea::softmax(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-5);
}

TEST(TensorType, ShapeAndIndexing) {
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), leea::element_count(t.shape()));
  t(1, 2) = 4.0f;
  EXPECT_EQ(t[5], 4.0f);
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>(3)), leea::DimensionError);
  EXPECT_EQ(t.reshaped({3, 2})[5], 4.0f);
  EXPECT_FALSE(leea::all_finite(Tensor({1}, {NAN})));
}

TEST(ParallelFor, RequestedWorkersParticipate) {
  leea::set_worker_count(4);
  std::mutex m;
  std::set<std::thread::id> seen;
  std::vector<int> hits(400, 0);
  leea::parallel_for(hits.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) ++hits[i];
    std::this_thread::sleep_for(std::chrono::microseconds(200));
    std::lock_guard lock(m);
    seen.insert(std::this_thread::get_id());
  });
  leea::set_worker_count(0);
  EXPECT_GE(seen.size(), 2u);
  for (int h : hits) EXPECT_EQ(h, 1);
}

}  // namespace
