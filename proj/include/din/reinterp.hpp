#pragma once

// Re-interpolation: maps decoder outputs on the reference grid back to an
// encounter's irregular observation times with a normalized kernel smoother,
//   x_d(t_j) = sum_i w(r_i, t_j, theta_d) o_{i,d} / max(sum_i w(r_i, t_j, theta_d), eps),
//   w(r, t, theta) = exp(-theta (r - t)^2),  theta_d = exp(g_d).

#include <cstddef>
#include <span>
#include <vector>

#include "din/autodiff.hpp"
#include "din/cohort.hpp"

namespace din::recon {

/// exp(-theta (r - t)^2). Throws UsageError if theta <= 0.
double reinterp_weight(double r, double t, double theta);

/// outputs: T x D decoder outputs; log_theta: 1 x D. Returns an N_obs x 1
/// column holding the reconstruction of every observation, variables in
/// canonical order and times ascending within a variable.
ad::Var reinterpolate(ad::Var outputs, std::span<const double> grid_times, const cohort::Encounter& encounter,
                      ad::Var log_theta);

/// Observed values in the same order as reinterpolate's output (N_obs x 1).
ad::Tensor observation_targets(const cohort::Encounter& encounter);

/// Sum of squared errors over every observation (1 x 1).
ad::Var squared_error(const cohort::Encounter& encounter, ad::Var reconstructions);

/// squared_error / N_obs. Throws DataError if the encounter has no observations.
ad::Var masked_mse(const cohort::Encounter& encounter, ad::Var reconstructions);

/// Value-only variant of reinterpolate, one vector per variable.
std::vector<std::vector<double>> reinterpolate_values(const ad::Tensor& outputs, std::span<const double> grid_times,
                                                      const cohort::Encounter& encounter,
                                                      const ad::Tensor& log_theta);

}  // namespace din::recon
