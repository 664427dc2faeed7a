#pragma once

// Interpolation network: maps an encounter's irregular per-variable series to
// a regular T-point representation with three channels per variable.
//
//   layer 1 (per variable d, bandwidth alpha_d = exp(a_d)):
//     lambda_d(r) = sum_i exp(-alpha_d (r - t_i)^2)
//     sigma_d(r)  = sum_i exp(-alpha_d (r - t_i)^2) x_i / max(lambda_d(r), eps)
//     gamma_d(r)  = same as sigma_d with bandwidth kappa * alpha_d
//   layer 2 (across variables, rho = row softmax of the mixing logits):
//     smooth_d(r)    = sum_d' rho_dd' lambda_d'(r) sigma_d'(r) / max(sum_d' rho_dd' lambda_d'(r), eps)
//     transient_d(r) = gamma_d(r) - smooth_d(r)
//     intensity_d(r) = log(1 + lambda_d(r))
//
// A variable without observations contributes lambda = sigma = gamma = 0.

#include <cstddef>
#include <vector>

#include "din/autodiff.hpp"
#include "din/cohort.hpp"

namespace din::interp {

struct ReferenceGrid {
  double start = 0.0;
  double end = cohort::kWindowMinutes;
  std::size_t points = 25;

  double spacing() const { return (end - start) / static_cast<double>(points - 1); }
  double at(std::size_t i) const { return start + spacing() * static_cast<double>(i); }
  std::vector<double> times() const;
  void validate() const;
};

struct InterpParams {
  ad::Tensor log_bandwidth;  // 1 x D
  ad::Tensor mixing_logits;  // D x D
  double kappa = 10.0;       // transient bandwidth multiplier, fixed
};

/// alpha_d = 1 / (2 spacing^2); mixing logits +3 on the diagonal, 0 elsewhere.
/// Throws UsageError if kappa <= 1 or D == 0.
InterpParams init_interp_params(std::size_t num_variables, double kappa, const ReferenceGrid& grid);

/// Graph outputs, each T x D.
struct InterpOutput {
  ad::Var smooth;
  ad::Var transient;
  ad::Var intensity;  // log(1 + lambda)
  ad::Var raw_intensity;
};

InterpOutput interpolate(ad::Graph& graph, const cohort::Encounter& encounter, const ReferenceGrid& grid,
                         ad::Var log_bandwidth, ad::Var mixing_logits, double kappa);

/// Encoder input rows: T x 3D, columns [smooth | transient | intensity].
ad::Var encoder_inputs(const InterpOutput& out);

/// Plain-valued representation, for inspection and dumps.
struct Representation {
  std::vector<double> times;
  ad::Tensor smooth;     // T x D
  ad::Tensor transient;  // T x D
  ad::Tensor intensity;  // T x D, log(1 + lambda)
};

Representation represent(const cohort::Encounter& encounter, const ReferenceGrid& grid, const InterpParams& params);

}  // namespace din::interp
