#include "din/interp.hpp"

#include <cmath>

#include "din/errors.hpp"

namespace din::interp {

using ad::Graph;
using ad::Tensor;
using ad::Var;

std::vector<double> ReferenceGrid::times() const {
  std::vector<double> r(points);
  for (std::size_t i = 0; i < points; ++i) r[i] = at(i);
  return r;
}

void ReferenceGrid::validate() const {
  if (points < 2) throw UsageError("reference grid needs at least 2 points");
  if (!(end > start)) throw UsageError("reference grid end must exceed start");
}

InterpParams init_interp_params(std::size_t num_variables, double kappa, const ReferenceGrid& grid) {
  if (num_variables == 0) throw UsageError("init_interp_params: need at least one variable");
  if (!(kappa > 1.0)) throw UsageError("init_interp_params: kappa must exceed 1 (transients need a wider bandwidth)");
  grid.validate();
  const double dr = grid.spacing();
  InterpParams p;
  p.kappa = kappa;
  p.log_bandwidth = Tensor({1, num_variables}, std::log(1.0 / (2.0 * dr * dr)));
  p.mixing_logits = Tensor({num_variables, num_variables}, 0.0);
  for (std::size_t d = 0; d < num_variables; ++d) p.mixing_logits.at(d, d) = 3.0;
  return p;
}

namespace {

struct KernelSmooth {
  Var intensity;  // T x 1
  Var value;      // T x 1
};

KernelSmooth kernel_smooth(Graph& g, Var bandwidth, const Tensor& dist_sq, const Tensor& values) {
  Var weights = ad::exp(ad::neg(ad::mul(ad::broadcast_to(bandwidth, dist_sq.shape()), g.constant(dist_sq))));
  Var intensity = ad::sum(weights, 1);
  Var value = ad::divide_eps(ad::matmul(weights, g.constant(values)), intensity);
  return {intensity, value};
}

}  // namespace

InterpOutput interpolate(Graph& g, const cohort::Encounter& encounter, const ReferenceGrid& grid, Var log_bandwidth,
                         Var mixing_logits, double kappa) {
  grid.validate();
  const std::size_t num_vars = encounter.series.size();
  const std::size_t steps = grid.points;
  if (log_bandwidth.shape() != ad::Shape{1, num_vars} || mixing_logits.shape() != ad::Shape{num_vars, num_vars}) {
    throw ShapeError("interpolate: parameters " + ad::to_string(log_bandwidth.shape()) + ", " +
                     ad::to_string(mixing_logits.shape()) + " do not match " + std::to_string(num_vars) +
                     " variables");
  }
  const std::vector<double> r = grid.times();

  std::vector<Var> lambdas, sigmas, gammas;
  Var zeros;
  for (std::size_t d = 0; d < num_vars; ++d) {
    const cohort::Series& s = encounter.series[d];
    if (s.empty()) {
      if (!zeros.valid()) zeros = g.constant(Tensor({steps, 1}, 0.0));
      lambdas.push_back(zeros);
      sigmas.push_back(zeros);
      gammas.push_back(zeros);
      continue;
    }
    Tensor dist_sq({steps, s.size()});
    Tensor values({s.size(), 1});
    for (std::size_t i = 0; i < s.size(); ++i) {
      values[i] = s[i].x;
      for (std::size_t t = 0; t < steps; ++t) dist_sq.at(t, i) = (r[t] - s[i].t) * (r[t] - s[i].t);
    }
    Var alpha = ad::exp(ad::slice(log_bandwidth, 0, 1, d, d + 1));
    KernelSmooth low = kernel_smooth(g, alpha, dist_sq, values);
    KernelSmooth high = kernel_smooth(g, ad::scale(alpha, kappa), dist_sq, values);
    lambdas.push_back(low.intensity);
    sigmas.push_back(low.value);
    gammas.push_back(high.value);
  }

  Var lambda = ad::concat(lambdas, 1);
  Var sigma = ad::concat(sigmas, 1);
  Var gamma = ad::concat(gammas, 1);
  Var rho_t = ad::transpose(ad::softmax(mixing_logits, 1));
  Var smooth = ad::divide_eps(ad::matmul(ad::mul(lambda, sigma), rho_t), ad::matmul(lambda, rho_t));
  return {smooth, ad::sub(gamma, smooth), ad::log1p(lambda), lambda};
}

Var encoder_inputs(const InterpOutput& out) {
  Var parts[] = {out.smooth, out.transient, out.intensity};
  return ad::concat(parts, 1);
}

Representation represent(const cohort::Encounter& encounter, const ReferenceGrid& grid, const InterpParams& params) {
  Graph g;
  InterpOutput out = interpolate(g, encounter, grid, g.constant(params.log_bandwidth),
                                 g.constant(params.mixing_logits), params.kappa);
  return {grid.times(), out.smooth.value(), out.transient.value(), out.intensity.value()};
}

}  // namespace din::interp
