#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace leea {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);

/// Dense row-major tensor of 32-bit floats.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  /// Throws DimensionError if `values.size()` differs from the shape's element count.
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  float& operator[](std::size_t flat) { return data_[flat]; }
  float operator[](std::size_t flat) const { return data_[flat]; }

  template <class... Index>
  float& operator()(Index... index) {
    return data_[offset({static_cast<std::size_t>(index)...})];
  }
  template <class... Index>
  float operator()(Index... index) const {
    return data_[offset({static_cast<std::size_t>(index)...})];
  }

  /// Same data under a new shape with equal element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<float> data_;
};

std::size_t element_count(const Shape& shape);
bool all_finite(const Tensor& t);

/// Read-only view of `count` stacked [rows, cols] matrices. Consecutive
/// matrices start `stride` floats apart; stride 0 broadcasts one matrix.
struct MatrixStack {
  const float* data = nullptr;
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  const float* matrix(std::size_t k) const noexcept { return data + k * stride; }
};

/// Read-only view of `count` stacked vectors of `length` floats.
struct VectorStack {
  const float* data = nullptr;
  std::size_t count = 0;
  std::size_t length = 0;
  std::size_t stride = 0;

  const float* vector(std::size_t k) const noexcept { return data + k * stride; }
};

/// out[k,i,j] = biases[k,j] + sum_l weights[k,j,l] * input[k,i,l]
///
/// `out` must hold p*b*n floats. The inner sum accumulates eight interleaved
/// partial sums over l in order, combines them with a fixed tree and then
/// adds the remainder left to right, so every output element is computed the
/// same way regardless of how the (k, i) cells are split across workers.
void pop_linear_into(const MatrixStack& weights, const VectorStack& biases,
                     const MatrixStack& input, std::span<float> out);

/// weights [p,n,m], biases [p,n], input [p,b,m] -> [p,b,n]
Tensor pop_linear(const Tensor& weights, const Tensor& biases, const Tensor& input);

/// Same as pop_linear with a single input [b,m] shared by all p networks.
Tensor pop_linear_shared(const Tensor& weights, const Tensor& biases, const Tensor& input);

Tensor relu(const Tensor& x);
void relu_inplace(std::span<float> x);

/// [b,h,w] -> [b,h/2,w/2] with non-overlapping 2x2 windows. h and w must be even.
Tensor maxpool2x2(const Tensor& x);

/// Softmax over the last axis with max subtraction. Outputs are floored at the
/// smallest normal float so every entry stays strictly positive.
Tensor softmax(const Tensor& x);
void softmax_rows_inplace(std::span<float> x, std::size_t row_length);

}  // namespace leea
