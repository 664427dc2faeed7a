#include "din/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "din/errors.hpp"

namespace din::ad {

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != numel(shape_)) {
    throw ShapeError("Tensor: data length " + std::to_string(data_.size()) + " does not match shape " +
                     to_string(shape_));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw ShapeError("rows(): tensor " + to_string(shape_) + " is not rank 2");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw ShapeError("cols(): tensor " + to_string(shape_) + " is not rank 2");
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item(): tensor " + to_string(shape_) + " has more than one element");
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace din::ad
