#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace forge {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape) noexcept;
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles. Value type: copies are deep and a
/// constructed tensor never changes shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor filled(Shape shape, double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Rank-2 accessors; throw DimensionError on other ranks.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_.back() + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.back() + c]; }

  std::span<const double> row(std::size_t r) const;
  std::span<double> row(std::size_t r);

  Tensor reshaped(Shape shape) const;

  /// Value equality (IEEE ==, so -0 == +0). Use bitwise_equal for bit-exact checks.
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept;
bool all_finite(const Tensor& t) noexcept;

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

double l2_norm(const Tensor& x) noexcept;
double l2_norm(std::span<const double> x) noexcept;
double max_abs(const Tensor& x) noexcept;
double max_element(const Tensor& x);
double sum(const Tensor& x) noexcept;

/// Index of the largest entry of each row of a rank-2 tensor; ties resolve
/// to the lowest index.
std::vector<std::size_t> argmax_rows(const Tensor& x);

/// Rows `indices` of a rank-2 tensor, in that order.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices);

}  // namespace forge
