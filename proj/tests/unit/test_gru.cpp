#include <doctest.h>

#include <cmath>

#include "din/errors.hpp"
#include "din/gradcheck.hpp"
#include "din/gru.hpp"

using namespace din;
using namespace din::seq2seq;
using ad::Tensor;
using ad::Var;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar GRU step written out by hand, independent of the tensor code.
double scalar_gru(double x, double h, const double w[3], const double u[3], const double b[3]) {
  const double z = sigm(w[0] * x + u[0] * h + b[0]);
  const double r = sigm(w[1] * x + u[1] * h + b[1]);
  const double c = std::tanh(w[2] * x + u[2] * (r * h) + b[2]);
  return z * h + (1.0 - z) * c;
}

Tensor random_tensor(Rng& rng, ad::Shape shape, double bound = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

TEST_CASE("gru_step examples") {
  ad::Graph g;
  GruVars zero = bind(g, GruCell::zeros(1, 1), false);
  Var h = gru_step(zero, g.constant(Tensor::scalar(3.0)), g.constant(Tensor::scalar(0.7)));
  CHECK(h.value().item() == doctest::Approx(0.35).epsilon(1e-15));
  Var h0 = gru_step(zero, g.constant(Tensor::scalar(3.0)), g.constant(Tensor::scalar(0.0)));
  CHECK(h0.value().item() == 0.0);

  GruCell c = GruCell::zeros(1, 1);
  c.w_h[0] = 1.0;
  GruVars cv = bind(g, c, false);
  Var h1 = gru_step(cv, g.constant(Tensor::scalar(1.0)), g.constant(Tensor::scalar(0.0)));
  CHECK(h1.value().item() == doctest::Approx(0.5 * std::tanh(1.0)).epsilon(1e-15));
  CHECK(h1.value().item() == doctest::Approx(0.380797).epsilon(1e-6));
}

TEST_CASE("encode examples") {
  ad::Graph g;
  GruVars zero = bind(g, GruCell::zeros(3, 4), false);
  Var ctx = encode(zero, g.constant(Tensor({1, 3}, 0.9)), 1);
  for (double v : ctx.value().data()) CHECK(v == 0.0);

  Rng rng(1);
  GruCell cell = GruCell::init(3, 4, rng);
  GruVars cv = bind(g, cell, false);
  Tensor rep = random_tensor(rng, {1, 15});
  Tensor two({2, 15});
  for (std::size_t i = 0; i < 15; ++i) two.at(0, i) = two.at(1, i) = rep[i];
  Var both = encode(cv, g.constant(two), 5);
  for (std::size_t j = 0; j < 4; ++j) CHECK(both.value().at(0, j) == both.value().at(1, j));
  CHECK_THROWS_AS(encode(cv, g.constant(Tensor({1, 14}, 0.0)), 5), ShapeError);
}

TEST_CASE("context vector responds to an intensity entry") {
  Rng rng(2);
  GruCell cell = GruCell::init(3, 4, rng);
  Tensor rep = random_tensor(rng, {1, 15});
  Tensor probe = random_tensor(rng, {1, 4});
  ad::ScalarFn f = [&](ad::Graph& g, std::span<const Var> p) {
    return ad::sum(ad::mul(encode(bind(g, cell, false), p[0], 5), g.constant(probe)));
  };
  const auto grads = ad::gradients(f, {rep});
  // Column 2 of step 0 is the third channel of the first step.
  CHECK(std::abs(grads[0][2]) > 1e-6);
  const auto report = ad::finite_diff_check(f, {rep});
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("decode examples") {
  ad::Graph g;
  GruVars zero = bind(g, GruCell::zeros(2 + 3, 3), false);
  ProjectionVars proj0 = bind(g, Projection::zeros(3, 2), false);
  auto outs = decode(zero, proj0, g.constant(Tensor({1, 3}, 0.0)), 4);
  REQUIRE(outs.size() == 4);
  for (const Var& o : outs) {
    CHECK(o.shape() == ad::Shape{1, 2});
    for (double v : o.value().data()) CHECK(v == 0.0);
  }

  Projection biased = Projection::zeros(3, 2);
  biased.bias = Tensor({1, 2}, {1.5, -2.0});
  Rng rng(3);
  auto outs_c = decode(bind(g, GruCell::init(5, 3, rng), false), bind(g, biased, false),
                       g.constant(random_tensor(rng, {1, 3})), 3);
  for (const Var& o : outs_c) {
    CHECK(o.value()[0] == 1.5);
    CHECK(o.value()[1] == -2.0);
  }
}

TEST_CASE("decode matches a scalar hand computation (H = 1, D = 1)") {
  // Decoder input is [o_{t-1}; ctx], so each input weight has two entries.
  GruCell c = GruCell::zeros(2, 1);
  c.w_z = Tensor({2, 1}, {0.3, -0.2});
  c.u_z = Tensor({1, 1}, {0.5});
  c.b_z = Tensor({1, 1}, {0.1});
  c.w_r = Tensor({2, 1}, {-0.4, 0.6});
  c.u_r = Tensor({1, 1}, {0.2});
  c.b_r = Tensor({1, 1}, {-0.1});
  c.w_h = Tensor({2, 1}, {0.7, 0.9});
  c.u_h = Tensor({1, 1}, {-0.3});
  c.b_h = Tensor({1, 1}, {0.05});
  Projection p{Tensor({1, 1}, {1.2}), Tensor({1, 1}, {-0.4})};
  const double ctx = 0.6;

  // Hand reference.
  auto step = [&](double o_prev, double s_prev) {
    const double z = sigm(0.3 * o_prev - 0.2 * ctx + 0.5 * s_prev + 0.1);
    const double r = sigm(-0.4 * o_prev + 0.6 * ctx + 0.2 * s_prev - 0.1);
    const double cand = std::tanh(0.7 * o_prev + 0.9 * ctx - 0.3 * (r * s_prev) + 0.05);
    return z * s_prev + (1.0 - z) * cand;
  };
  const double s1 = step(0.0, ctx);
  const double o1 = 1.2 * s1 - 0.4;
  const double s2 = step(o1, s1);
  const double o2 = 1.2 * s2 - 0.4;

  ad::Graph g;
  auto outs = decode(bind(g, c, false), bind(g, p, false), g.constant(Tensor::scalar(ctx)), 2);
  CHECK(outs[0].value().item() == doctest::Approx(o1).epsilon(1e-14));
  CHECK(outs[1].value().item() == doctest::Approx(o2).epsilon(1e-14));
}

TEST_CASE("tensor gru_step agrees with the scalar reference") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    double w[3], u[3], b[3];
    for (int i = 0; i < 3; ++i) {
      w[i] = rng.uniform(-2, 2);
      u[i] = rng.uniform(-2, 2);
      b[i] = rng.uniform(-1, 1);
    }
    const double x = rng.uniform(-3, 3), h = rng.uniform(-1, 1);
    GruCell c = GruCell::zeros(1, 1);
    c.w_z[0] = w[0], c.w_r[0] = w[1], c.w_h[0] = w[2];
    c.u_z[0] = u[0], c.u_r[0] = u[1], c.u_h[0] = u[2];
    c.b_z[0] = b[0], c.b_r[0] = b[1], c.b_h[0] = b[2];
    ad::Graph g;
    Var out = gru_step(bind(g, c, false), g.constant(Tensor::scalar(x)), g.constant(Tensor::scalar(h)));
    CHECK(out.value().item() == doctest::Approx(scalar_gru(x, h, w, u, b)).epsilon(1e-14));
  }
}

TEST_CASE("hidden states stay bounded by max(|h0|, 1)") {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    GruCell c = GruCell::zeros(2, 3);
    for (auto* t : {&c.w_z, &c.u_z, &c.b_z, &c.w_r, &c.u_r, &c.b_r, &c.w_h, &c.u_h, &c.b_h})
      for (auto& v : t->data()) v = rng.uniform(-4, 4);
    ad::Graph g;
    GruVars cv = bind(g, c, false);
    Tensor h0 = random_tensor(rng, {1, 3}, 3.0);
    double bound = 1.0;
    for (double v : h0.data()) bound = std::max(bound, std::abs(v));
    Var h = g.constant(h0);
    for (int t = 0; t < 20; ++t) {
      h = gru_step(cv, g.constant(random_tensor(rng, {1, 2}, 5.0)), h);
      for (double v : h.value().data()) CHECK(std::abs(v) <= bound);
    }
  }
}

TEST_CASE("encoder-decoder reconstruction gradient passes finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t hidden = 2 + rng.below(3), steps = 2 + rng.below(4), dims = 1 + rng.below(2);
    GruCell enc = GruCell::init(3 * dims, hidden, rng);
    GruCell dec = GruCell::init(dims + hidden, hidden, rng);
    Projection proj = Projection::init(hidden, dims, rng);
    for (auto* t : {&enc.b_z, &enc.b_h, &dec.b_r, &proj.bias})
      for (auto& v : t->data()) v = rng.uniform(-0.3, 0.3);
    Tensor inputs = random_tensor(rng, {2, steps * 3 * dims});
    Tensor target = random_tensor(rng, {2, steps * dims});

    std::vector<Tensor> params;
    std::vector<std::string> names;
    for (auto& [n, t] : enc.named("enc")) params.push_back(*t), names.push_back(n);
    for (auto& [n, t] : dec.named("dec")) params.push_back(*t), names.push_back(n);
    params.push_back(proj.weight), names.push_back("proj.w");
    params.push_back(proj.bias), names.push_back("proj.b");

    ad::ScalarFn f = [&](ad::Graph& g, std::span<const Var> p) {
      GruVars e{p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8]};
      GruVars d{p[9], p[10], p[11], p[12], p[13], p[14], p[15], p[16], p[17]};
      ProjectionVars pr{p[18], p[19]};
      Var ctx = encode(e, g.constant(inputs), steps);
      auto outs = decode(d, pr, ctx, steps);
      Var all = ad::concat(outs, 1);
      return ad::mean(ad::square(ad::sub(all, g.constant(target))));
    };
    const auto report = ad::finite_diff_check(f, params, {}, names);
    for (const auto& p : report.params) {
      INFO(p.name << " " << p.max_rel_error);
      CHECK(p.max_rel_error < 1e-4);
    }
  }
}
