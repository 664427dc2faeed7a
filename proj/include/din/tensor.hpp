#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace din::ad {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t numel(const Shape& shape);

/// Dense row-major tensor of 64-bit reals. Most ops in this project work on
/// rank-2 tensors; vectors are stored as 1xN rows or Nx1 columns.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);
  static Tensor column(std::span<const double> values);
  static Tensor row(std::span<const double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  /// Value of a single-element tensor.
  double item() const;
  bool all_finite() const;
  void fill(double v);

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace din::ad
