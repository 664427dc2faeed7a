#include "din/gru.hpp"

#include <cmath>

#include "din/errors.hpp"

namespace din::seq2seq {

using ad::Tensor;
using ad::Var;

namespace {

Tensor uniform_tensor(ad::Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Var affine_gate(Var x, Var w, Var h, Var u, Var b) {
  const ad::Shape shape{x.shape()[0], w.shape()[1]};
  return ad::add(ad::add(ad::matmul(x, w), ad::matmul(h, u)), ad::broadcast_to(b, shape));
}

}  // namespace

GruCell GruCell::zeros(std::size_t in, std::size_t h) {
  if (in == 0 || h == 0) throw UsageError("GruCell: dimensions must be positive");
  return GruCell{Tensor({in, h}), Tensor({h, h}), Tensor({1, h}), Tensor({in, h}), Tensor({h, h}),
                 Tensor({1, h}),  Tensor({in, h}), Tensor({h, h}), Tensor({1, h})};
}

GruCell GruCell::init(std::size_t in, std::size_t h, Rng& rng) {
  GruCell c = zeros(in, h);
  const double bx = 1.0 / std::sqrt(static_cast<double>(in));
  const double bh = 1.0 / std::sqrt(static_cast<double>(h));
  for (Tensor* w : {&c.w_z, &c.w_r, &c.w_h}) *w = uniform_tensor(w->shape(), bx, rng);
  for (Tensor* u : {&c.u_z, &c.u_r, &c.u_h}) *u = uniform_tensor(u->shape(), bh, rng);
  return c;
}

std::vector<std::pair<std::string, Tensor*>> GruCell::named(const std::string& prefix) {
  return {{prefix + ".w_z", &w_z}, {prefix + ".u_z", &u_z}, {prefix + ".b_z", &b_z},
          {prefix + ".w_r", &w_r}, {prefix + ".u_r", &u_r}, {prefix + ".b_r", &b_r},
          {prefix + ".w_h", &w_h}, {prefix + ".u_h", &u_h}, {prefix + ".b_h", &b_h}};
}

std::vector<std::pair<std::string, const Tensor*>> GruCell::named(const std::string& prefix) const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<GruCell*>(this)->named(prefix)) out.emplace_back(name, t);
  return out;
}

Projection Projection::zeros(std::size_t h, std::size_t d) { return {Tensor({h, d}), Tensor({1, d})}; }

Projection Projection::init(std::size_t h, std::size_t d, Rng& rng) {
  return {uniform_tensor({h, d}, 1.0 / std::sqrt(static_cast<double>(h)), rng), Tensor({1, d})};
}

GruVars bind(ad::Graph& g, const GruCell& c, bool trainable) {
  auto leaf = [&](const Tensor& t) { return trainable ? g.parameter(t) : g.constant(t); };
  return {leaf(c.w_z), leaf(c.u_z), leaf(c.b_z), leaf(c.w_r), leaf(c.u_r),
          leaf(c.b_r), leaf(c.w_h), leaf(c.u_h), leaf(c.b_h)};
}

ProjectionVars bind(ad::Graph& g, const Projection& p, bool trainable) {
  if (trainable) return {g.parameter(p.weight), g.parameter(p.bias)};
  return {g.constant(p.weight), g.constant(p.bias)};
}

Var gru_step(const GruVars& c, Var x, Var h) {
  Var z = ad::sigmoid(affine_gate(x, c.w_z, h, c.u_z, c.b_z));
  Var r = ad::sigmoid(affine_gate(x, c.w_r, h, c.u_r, c.b_r));
  Var candidate = ad::tanh(affine_gate(x, c.w_h, ad::mul(r, h), c.u_h, c.b_h));
  Var ones = h.graph()->constant(Tensor(z.shape(), 1.0));
  return ad::add(ad::mul(z, h), ad::mul(ad::sub(ones, z), candidate));
}

Var encode(const GruVars& c, Var inputs, std::size_t steps) {
  const std::size_t in = c.w_z.shape()[0];
  const std::size_t hidden = c.u_z.shape()[0];
  if (steps == 0 || inputs.value().rank() != 2 || inputs.shape()[1] != steps * in) {
    throw ShapeError("encode: inputs " + ad::to_string(inputs.shape()) + " do not hold " + std::to_string(steps) +
                     " steps of width " + std::to_string(in));
  }
  const std::size_t batch = inputs.shape()[0];
  Var h = inputs.graph()->constant(Tensor({batch, hidden}, 0.0));
  for (std::size_t t = 0; t < steps; ++t) {
    h = gru_step(c, ad::slice(inputs, 0, batch, t * in, (t + 1) * in), h);
  }
  return h;
}

std::vector<Var> decode(const GruVars& c, const ProjectionVars& proj, Var context, std::size_t steps) {
  const std::size_t hidden = c.u_z.shape()[0];
  const std::size_t out_dim = proj.weight.shape()[1];
  if (c.w_z.shape()[0] != out_dim + hidden || context.shape()[1] != hidden || proj.weight.shape()[0] != hidden) {
    throw ShapeError("decode: decoder input " + ad::to_string(c.w_z.shape()) + " must be (D + H) x H with context " +
                     ad::to_string(context.shape()) + " and projection " + ad::to_string(proj.weight.shape()));
  }
  const std::size_t batch = context.shape()[0];
  ad::Graph& g = *context.graph();
  Var s = context;
  Var o = g.constant(Tensor({batch, out_dim}, 0.0));
  const ad::Shape out_shape{batch, out_dim};
  std::vector<Var> outputs;
  outputs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    Var parts[] = {o, context};
    s = gru_step(c, ad::concat(parts, 1), s);
    o = ad::add(ad::matmul(s, proj.weight), ad::broadcast_to(proj.bias, out_shape));
    outputs.push_back(o);
  }
  return outputs;
}

}  // namespace din::seq2seq
