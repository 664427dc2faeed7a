#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "din/kernels.hpp"

namespace din::cluster {

/// Dense row-major m x p feature matrix with one id per row.
struct FeatureMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t m, std::size_t p);

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  kernels::MatrixView view() const { return {data, rows, cols}; }

  /// Rows selected by index, ids and columns carried over.
  FeatureMatrix subset(std::span<const std::size_t> indices) const;

  /// Throws DataError on size mismatches or non-finite entries.
  void validate() const;
};

}  // namespace din::cluster
