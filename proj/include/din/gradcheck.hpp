#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "din/autodiff.hpp"

namespace din::ad {

/// Builds a scalar loss from parameter leaves created in `graph`.
using ScalarFn = std::function<Var(Graph& graph, std::span<const Var> params)>;

struct GradCheckParam {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<GradCheckParam> params;
  double max_rel_error = 0.0;
  std::size_t entries_checked = 0;
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Relative error is |a - n| / max(|a|, |n|, denominator_floor).
  double denominator_floor = 1e-8;
};

/// Compares backward() gradients against central differences
/// (f(p + h) - f(p - h)) / 2h for every entry of every parameter tensor.
GradCheckReport finite_diff_check(const ScalarFn& f, const std::vector<Tensor>& params,
                                  const GradCheckOptions& options = {},
                                  const std::vector<std::string>& names = {});

/// Evaluates f with all parameters bound as constants and returns the scalar.
double evaluate(const ScalarFn& f, const std::vector<Tensor>& params);

/// Returns d f / d params via one backward pass.
std::vector<Tensor> gradients(const ScalarFn& f, const std::vector<Tensor>& params);

}  // namespace din::ad
