#include "din/reinterp.hpp"

#include <cmath>
#include <string>

#include "din/errors.hpp"

namespace din::recon {

using ad::Tensor;
using ad::Var;

double reinterp_weight(double r, double t, double theta) {
  if (!(theta > 0.0)) throw UsageError("reinterp_weight: theta must be positive");
  return std::exp(-theta * (r - t) * (r - t));
}

Var reinterpolate(Var outputs, std::span<const double> grid_times, const cohort::Encounter& encounter,
                  Var log_theta) {
  const std::size_t steps = grid_times.size();
  const std::size_t num_vars = encounter.series.size();
  if (outputs.shape() != ad::Shape{steps, num_vars} || log_theta.shape() != ad::Shape{1, num_vars}) {
    throw ShapeError("reinterpolate: outputs " + ad::to_string(outputs.shape()) + " and log_theta " +
                     ad::to_string(log_theta.shape()) + " do not match " + std::to_string(steps) + " steps, " +
                     std::to_string(num_vars) + " variables");
  }
  std::vector<Var> parts;
  for (std::size_t d = 0; d < num_vars; ++d) {
    const cohort::Series& s = encounter.series[d];
    if (s.empty()) continue;
    Tensor dist_sq({s.size(), steps});
    for (std::size_t j = 0; j < s.size(); ++j)
      for (std::size_t i = 0; i < steps; ++i) dist_sq.at(j, i) = (grid_times[i] - s[j].t) * (grid_times[i] - s[j].t);
    Var theta = ad::broadcast_to(ad::exp(ad::slice(log_theta, 0, 1, d, d + 1)), dist_sq.shape());
    Var w = ad::exp(ad::neg(ad::mul(theta, outputs.graph()->constant(std::move(dist_sq)))));
    Var o = ad::slice(outputs, 0, steps, d, d + 1);
    parts.push_back(ad::divide_eps(ad::matmul(w, o), ad::sum(w, 1)));
  }
  if (parts.empty()) throw DataError("reinterpolate: encounter '" + encounter.id + "' has no observations");
  return parts.size() == 1 ? parts[0] : ad::concat(parts, 0);
}

Tensor observation_targets(const cohort::Encounter& encounter) {
  Tensor t({encounter.num_observations(), 1});
  std::size_t k = 0;
  for (const auto& s : encounter.series)
    for (const auto& o : s) t[k++] = o.x;
  return t;
}

Var squared_error(const cohort::Encounter& encounter, Var reconstructions) {
  Tensor targets = observation_targets(encounter);
  if (reconstructions.shape() != targets.shape()) {
    throw ShapeError("squared_error: reconstructions " + ad::to_string(reconstructions.shape()) + " vs " +
                     ad::to_string(targets.shape()) + " observations");
  }
  return ad::sum(ad::square(ad::sub(reconstructions, reconstructions.graph()->constant(std::move(targets)))));
}

Var masked_mse(const cohort::Encounter& encounter, Var reconstructions) {
  const std::size_t n = encounter.num_observations();
  if (n == 0) throw DataError("masked_mse: encounter '" + encounter.id + "' has no observations");
  return ad::scale(squared_error(encounter, reconstructions), 1.0 / static_cast<double>(n));
}

std::vector<std::vector<double>> reinterpolate_values(const Tensor& outputs, std::span<const double> grid_times,
                                                      const cohort::Encounter& encounter, const Tensor& log_theta) {
  ad::Graph g;
  Var all = reinterpolate(g.constant(outputs), grid_times, encounter, g.constant(log_theta));
  std::vector<std::vector<double>> out(encounter.series.size());
  std::size_t k = 0;
  for (std::size_t d = 0; d < encounter.series.size(); ++d)
    for (std::size_t j = 0; j < encounter.series[d].size(); ++j) out[d].push_back(all.value()[k++]);
  return out;
}

}  // namespace din::recon
