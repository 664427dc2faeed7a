#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "din/errors.hpp"
#include "din/gradcheck.hpp"
#include "din/interp.hpp"
#include "din/random.hpp"

using namespace din;
using namespace din::interp;
using ad::Tensor;

namespace {

cohort::Encounter make_encounter(std::size_t num_vars) {
  cohort::Encounter e;
  e.id = "x";
  e.series.resize(num_vars);
  return e;
}

// Row softmax of these logits is exactly the identity.
Tensor identity_logits(std::size_t d) {
  Tensor p({d, d}, -1e6);
  for (std::size_t i = 0; i < d; ++i) p.at(i, i) = 0.0;
  return p;
}

InterpParams params_with(std::size_t d, double alpha, Tensor logits, double kappa = 10.0) {
  return InterpParams{Tensor({1, d}, std::log(alpha)), std::move(logits), kappa};
}

cohort::Encounter random_encounter(Rng& rng, std::size_t num_vars, std::size_t max_obs) {
  cohort::Encounter e = make_encounter(num_vars);
  for (auto& s : e.series) {
    const std::size_t n = 1 + rng.below(max_obs);
    for (std::size_t i = 0; i < n; ++i) s.push_back({rng.uniform(0.0, 360.0), rng.normal()});
    cohort::normalize_series(s);
  }
  return e;
}

}  // namespace

TEST_CASE("single observation: smooth channel is the observed value everywhere") {
  cohort::Encounter e = make_encounter(2);
  e.series[0] = {{120.0, 5.0}};
  e.series[1] = {{30.0, -1.0}};
  const ReferenceGrid grid;  // 25 points, 15 min spacing
  // Bandwidth wide enough that the kernel mass stays above eps over the window.
  const Representation rep = represent(e, grid, params_with(2, 1.0 / (360.0 * 360.0), identity_logits(2)));
  for (std::size_t t = 0; t < grid.points; ++t) {
    CHECK(rep.smooth.at(t, 0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(std::abs(rep.transient.at(t, 0)) < 1e-12);
  }
  // r = 120 is grid point 8; raw intensity 1 there, so log(1 + 1).
  CHECK(rep.intensity.at(8, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("variable with no observations produces zero channels") {
  cohort::Encounter e = make_encounter(3);
  e.series[0] = {{10.0, 1.0}, {200.0, 2.0}};
  e.series[2] = {{100.0, -3.0}};
  const Representation rep = represent(e, ReferenceGrid{}, params_with(3, 1e-3, identity_logits(3)));
  for (std::size_t t = 0; t < 25; ++t) {
    CHECK(rep.smooth.at(t, 1) == 0.0);
    CHECK(rep.transient.at(t, 1) == 0.0);
    CHECK(rep.intensity.at(t, 1) == 0.0);
  }
}

TEST_CASE("two-point kernel smoother at the midpoint") {
  cohort::Encounter e = make_encounter(1);
  e.series[0] = {{0.0, 0.0}, {360.0, 1.0}};
  const double alpha = 1.0 / 3600.0;
  ad::Graph g;
  InterpOutput out = interpolate(g, e, ReferenceGrid{}, g.constant(Tensor({1, 1}, std::log(alpha))),
                                 g.constant(identity_logits(1)), 10.0);
  // r = 180 is grid point 12; both weights exp(-180^2 / 3600) = exp(-9).
  CHECK(out.smooth.value().at(12, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.raw_intensity.value().at(12, 0) == doctest::Approx(2.0 * std::exp(-9.0)).epsilon(1e-12));
  // Independent evaluation at another grid point (r = 60).
  const double w0 = std::exp(-alpha * 60.0 * 60.0), w1 = std::exp(-alpha * 300.0 * 300.0);
  CHECK(out.smooth.value().at(4, 0) == doctest::Approx(w1 / (w0 + w1)).epsilon(1e-12));
}

TEST_CASE("init_interp_params") {
  const ReferenceGrid grid;
  const InterpParams p = init_interp_params(6, 10.0, grid);
  CHECK(grid.spacing() == 15.0);
  CHECK(std::exp(p.log_bandwidth[0]) == doctest::Approx(1.0 / 450.0).epsilon(1e-12));
  ad::Graph g;
  ad::Var rho = ad::softmax(g.constant(p.mixing_logits), 1);
  const double e3 = std::exp(3.0);
  CHECK(rho.value().at(0, 0) == doctest::Approx(e3 / (e3 + 5.0)).epsilon(1e-12));
  CHECK(rho.value().at(0, 0) == doctest::Approx(0.8007).epsilon(1e-4));
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 6; ++c) s += rho.value().at(r, c);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(init_interp_params(6, 1.0, grid), UsageError);
  CHECK_THROWS_AS(init_interp_params(0, 10.0, grid), UsageError);
}

TEST_CASE("smooth channel stays within the observed range") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    cohort::Encounter e = random_encounter(rng, 3, 8);
    // alpha <= 1e-4 keeps lambda above eps on [0, 360].
    const double alpha = rng.uniform(1e-5, 1e-4);
    const Representation rep = represent(e, ReferenceGrid{}, params_with(3, alpha, identity_logits(3)));
    for (std::size_t d = 0; d < 3; ++d) {
      double lo = 1e300, hi = -1e300;
      for (const auto& o : e.series[d]) {
        lo = std::min(lo, o.x);
        hi = std::max(hi, o.x);
      }
      for (std::size_t t = 0; t < 25; ++t) {
        CHECK(rep.smooth.at(t, d) >= lo - 1e-9);
        CHECK(rep.smooth.at(t, d) <= hi + 1e-9);
      }
    }
  }
}

TEST_CASE("adding an observation never decreases intensity") {
  Rng rng(202);
  const InterpParams p = init_interp_params(2, 10.0, ReferenceGrid{});
  for (int trial = 0; trial < 30; ++trial) {
    cohort::Encounter e = random_encounter(rng, 2, 6);
    cohort::Encounter more = e;
    more.series[0].push_back({rng.uniform(0.0, 360.0), rng.normal()});
    cohort::normalize_series(more.series[0]);
    const Representation a = represent(e, ReferenceGrid{}, p);
    const Representation b = represent(more, ReferenceGrid{}, p);
    for (std::size_t t = 0; t < 25; ++t) CHECK(b.intensity.at(t, 0) >= a.intensity.at(t, 0));
  }
}

TEST_CASE("output is invariant to a common time shift") {
  Rng rng(303);
  for (int trial = 0; trial < 10; ++trial) {
    cohort::Encounter e = random_encounter(rng, 3, 6);
    const double shift = rng.uniform(-500.0, 500.0);
    cohort::Encounter shifted = e;
    for (auto& s : shifted.series)
      for (auto& o : s) o.t += shift;
    ReferenceGrid grid;
    ReferenceGrid moved{grid.start + shift, grid.end + shift, grid.points};
    InterpParams p = init_interp_params(3, 10.0, grid);
    p.mixing_logits.at(0, 1) = 0.7;
    const Representation a = represent(e, grid, p);
    const Representation b = represent(shifted, moved, p);
    for (std::size_t i = 0; i < a.smooth.size(); ++i) {
      CHECK(std::abs(a.smooth[i] - b.smooth[i]) < 1e-9);
      CHECK(std::abs(a.transient[i] - b.transient[i]) < 1e-9);
      CHECK(std::abs(a.intensity[i] - b.intensity[i]) < 1e-9);
    }
  }
}

TEST_CASE("interpolation is differentiable in bandwidths and mixing logits") {
  Rng rng(404);
  for (int trial = 0; trial < 5; ++trial) {
    cohort::Encounter e = random_encounter(rng, 3, 5);
    const ReferenceGrid grid{0.0, 360.0, 7};
    InterpParams p = init_interp_params(3, 10.0, grid);
    for (auto& v : p.mixing_logits.data()) v += rng.uniform(-0.5, 0.5);
    for (auto& v : p.log_bandwidth.data()) v += rng.uniform(-0.5, 0.5);
    Tensor weights({grid.points, 9});
    for (auto& v : weights.data()) v = rng.uniform(-1.0, 1.0);
    ad::ScalarFn f = [&](ad::Graph& g, std::span<const ad::Var> params) {
      InterpOutput out = interpolate(g, e, grid, params[0], params[1], p.kappa);
      return ad::sum(ad::mul(encoder_inputs(out), g.constant(weights)));
    };
    const auto report = ad::finite_diff_check(f, {p.log_bandwidth, p.mixing_logits});
    INFO("max rel error " << report.max_rel_error);
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("empty variable: its bandwidth and mixing column have zero gradient") {
  // These entries only enter through a scale-invariant ratio or not at all, so
  // central differences return round-off; assert the exact zeros instead.
  Rng rng(405);
  cohort::Encounter e = random_encounter(rng, 3, 5);
  e.series[1].clear();
  const ReferenceGrid grid{0.0, 360.0, 7};
  InterpParams p = init_interp_params(3, 10.0, grid);
  for (auto& v : p.mixing_logits.data()) v += rng.uniform(-0.5, 0.5);
  ad::ScalarFn f = [&](ad::Graph& g, std::span<const ad::Var> params) {
    InterpOutput out = interpolate(g, e, grid, params[0], params[1], p.kappa);
    return ad::sum(ad::square(encoder_inputs(out)));
  };
  const auto grads = ad::gradients(f, {p.log_bandwidth, p.mixing_logits});
  CHECK(grads[0][1] == 0.0);
  CHECK(std::abs(grads[1].at(1, 1)) < 1e-12);
  CHECK(std::abs(grads[1].at(0, 1)) < 1e-12);
  CHECK(std::abs(grads[1].at(1, 0)) > 1e-6);
}

TEST_CASE("parameter shapes are validated") {
  cohort::Encounter e = make_encounter(2);
  e.series[0] = {{1.0, 1.0}};
  ad::Graph g;
  CHECK_THROWS_AS(interpolate(g, e, ReferenceGrid{}, g.constant(Tensor({1, 3}, 0.0)),
                              g.constant(Tensor({2, 2}, 0.0)), 10.0),
                  ShapeError);
  CHECK_THROWS_AS(ReferenceGrid({0.0, 360.0, 1}).validate(), UsageError);
}
