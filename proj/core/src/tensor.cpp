#include "leea/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <limits>
#include <sstream>

#include "leea/errors.hpp"
#include "leea/parallel.hpp"

namespace leea {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("shape", "tensor shape " + to_string(shape_) + " needs " +
                                      std::to_string(element_count(shape_)) + " values, got " +
                                      std::to_string(data_.size()));
  }
}

Tensor Tensor::reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }

Tensor Tensor::reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw DimensionError("rank", "index rank " + std::to_string(index.size()) +
                                     " does not match tensor " + to_string(shape_));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return flat;
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.values().begin(), t.values().end(),
                     [](float v) { return std::isfinite(v); });
}

namespace {

constexpr std::size_t kLanes = 8;
constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kOutBlock = 4;

// Eight float lanes; GCC and Clang lower this to one AVX register or to
// pairs of SSE registers, and to scalar code elsewhere.
using Lanes = float __attribute__((vector_size(kLanes * sizeof(float))));

inline Lanes load_lanes(const float* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline float reduce_lanes(const Lanes& a) {
  return ((a[0] + a[4]) + (a[2] + a[6])) + ((a[1] + a[5]) + (a[3] + a[7]));
}

// J weight rows against R input rows. Every (weight row, input row) pair
// accumulates lane t over the columns q with q % 8 == t, then reduces the
// lanes with the fixed tree, adds the tail columns left to right and finally
// the bias. The blocking never changes that sequence, so each output is
// bit-identical to the 1x1 case.
template <std::size_t J, std::size_t R>
inline void linear_block(const float* w, const float* bias, const float* x, std::size_t m,
                         std::size_t n, float* out) {
  Lanes acc[J][R] = {};
  const std::size_t full = m - m % kLanes;
  for (std::size_t q = 0; q < full; q += kLanes) {
    Lanes xv[R];
    for (std::size_t r = 0; r < R; ++r) xv[r] = load_lanes(x + r * m + q);
    for (std::size_t j = 0; j < J; ++j) {
      const Lanes wv = load_lanes(w + j * m + q);
      for (std::size_t r = 0; r < R; ++r) acc[j][r] += wv * xv[r];
    }
  }
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t r = 0; r < R; ++r) {
      float s = reduce_lanes(acc[j][r]);
      for (std::size_t l = full; l < m; ++l) s += w[j * m + l] * x[r * m + l];
      out[r * n + j] = s + bias[j];
    }
  }
}

template <std::size_t R>
inline void linear_rows(const float* w_k, const float* b_k, const float* x, std::size_t m,
                        std::size_t n, float* out) {
  std::size_t j = 0;
  for (; j + kOutBlock <= n; j += kOutBlock) {
    linear_block<kOutBlock, R>(w_k + j * m, b_k + j, x, m, n, out + j);
  }
  for (; j < n; ++j) linear_block<1, R>(w_k + j * m, b_k + j, x, m, n, out + j);
}

void linear_cell(const MatrixStack& weights, const VectorStack& biases, const MatrixStack& input,
                 std::size_t k, std::size_t row_begin, std::size_t row_end, float* out_k) {
  const std::size_t n = weights.rows;
  const std::size_t m = weights.cols;
  const float* w_k = weights.matrix(k);
  const float* b_k = biases.vector(k);
  const float* x_k = input.matrix(k);

  std::size_t i = row_begin;
  for (; i + kRowBlock <= row_end; i += kRowBlock) {
    linear_rows<kRowBlock>(w_k, b_k, x_k + i * m, m, n, out_k + i * n);
  }
  for (; i < row_end; ++i) linear_rows<1>(w_k, b_k, x_k + i * m, m, n, out_k + i * n);
}

}  // namespace

void pop_linear_into(const MatrixStack& weights, const VectorStack& biases,
                     const MatrixStack& input, std::span<float> out) {
  const std::size_t p = weights.count;
  if (biases.count != p || input.count != p) {
    throw DimensionError("population", "population extents differ: weights " +
                                           std::to_string(p) + ", biases " +
                                           std::to_string(biases.count) + ", input " +
                                           std::to_string(input.count));
  }
  if (biases.length != weights.rows) {
    throw DimensionError("output", "bias length " + std::to_string(biases.length) +
                                       " does not match weight rows " +
                                       std::to_string(weights.rows));
  }
  if (input.cols != weights.cols) {
    throw DimensionError("inner", "input features " + std::to_string(input.cols) +
                                      " do not match weight columns " +
                                      std::to_string(weights.cols));
  }
  const std::size_t b = input.rows;
  const std::size_t n = weights.rows;
  if (out.size() != p * b * n) {
    throw DimensionError("output", "output buffer holds " + std::to_string(out.size()) +
                                       " floats, need " + std::to_string(p * b * n));
  }
  if (p == 0 || b == 0 || n == 0) return;

  // Cells are (individual, block of rows); they share no output elements.
  const std::size_t blocks_per_individual = (b + kRowBlock * 4 - 1) / (kRowBlock * 4);
  parallel_for(p * blocks_per_individual, [&](std::size_t begin, std::size_t end) {
    for (std::size_t cell = begin; cell < end; ++cell) {
      const std::size_t k = cell / blocks_per_individual;
      const std::size_t block = cell % blocks_per_individual;
      const std::size_t row_begin = block * kRowBlock * 4;
      const std::size_t row_end = std::min(b, row_begin + kRowBlock * 4);
      linear_cell(weights, biases, input, k, row_begin, row_end, out.data() + k * b * n);
    }
  });
}

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* name) {
  if (t.rank() != rank) {
    throw DimensionError("rank", std::string(name) + " must have rank " + std::to_string(rank) +
                                     ", got shape " + to_string(t.shape()));
  }
}

MatrixStack stack_of(const Tensor& t) {
  return {t.data(), t.dim(0), t.dim(1), t.dim(2), t.dim(1) * t.dim(2)};
}

VectorStack stack_of_vectors(const Tensor& t) {
  return {t.data(), t.dim(0), t.dim(1), t.dim(1)};
}

}  // namespace

Tensor pop_linear(const Tensor& weights, const Tensor& biases, const Tensor& input) {
  require_rank(weights, 3, "weights");
  require_rank(biases, 2, "biases");
  require_rank(input, 3, "input");
  Tensor out({input.dim(0), input.dim(1), weights.dim(1)});
  pop_linear_into(stack_of(weights), stack_of_vectors(biases), stack_of(input), out.values());
  return out;
}

Tensor pop_linear_shared(const Tensor& weights, const Tensor& biases, const Tensor& input) {
  require_rank(weights, 3, "weights");
  require_rank(biases, 2, "biases");
  require_rank(input, 2, "input");
  const std::size_t p = weights.dim(0);
  MatrixStack shared{input.data(), p, input.dim(0), input.dim(1), 0};
  Tensor out({p, input.dim(0), weights.dim(1)});
  pop_linear_into(stack_of(weights), stack_of_vectors(biases), shared, out.values());
  return out;
}

void relu_inplace(std::span<float> x) {
  for (auto& v : x) v = v > 0.0f ? v : 0.0f;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  relu_inplace(out.values());
  return out;
}

Tensor maxpool2x2(const Tensor& x) {
  require_rank(x, 3, "maxpool input");
  const std::size_t b = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0) throw DimensionError("height", "maxpool2x2 needs even height, got " + std::to_string(h));
  if (w % 2 != 0) throw DimensionError("width", "maxpool2x2 needs even width, got " + std::to_string(w));
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({b, oh, ow});
  const float* in = x.data();
  float* o = out.data();
  for (std::size_t n = 0; n < b; ++n) {
    const float* img = in + n * h * w;
    for (std::size_t r = 0; r < oh; ++r) {
      const float* top = img + (2 * r) * w;
      const float* bottom = top + w;
      for (std::size_t c = 0; c < ow; ++c) {
        *o++ = std::max(std::max(top[2 * c], top[2 * c + 1]),
                        std::max(bottom[2 * c], bottom[2 * c + 1]));
      }
    }
  }
  return out;
}

void softmax_rows_inplace(std::span<float> x, std::size_t row_length) {
  if (row_length == 0) return;
  if (x.size() % row_length != 0) {
    throw DimensionError("last", "softmax buffer of " + std::to_string(x.size()) +
                                     " floats is not a multiple of row length " +
                                     std::to_string(row_length));
  }
  constexpr float kFloor = std::numeric_limits<float>::min();
  for (std::size_t start = 0; start < x.size(); start += row_length) {
    float* row = x.data() + start;
    const float peak = *std::max_element(row, row + row_length);
    float total = 0.0f;
    for (std::size_t j = 0; j < row_length; ++j) {
      row[j] = std::exp(row[j] - peak);
      total += row[j];
    }
    const float inv = 1.0f / total;
    for (std::size_t j = 0; j < row_length; ++j) row[j] = std::max(row[j] * inv, kFloor);
  }
}

Tensor softmax(const Tensor& x) {
  Tensor out = x;
  if (x.rank() == 0) return out;
  softmax_rows_inplace(out.values(), x.shape().back());
  return out;
}

}  // namespace leea
