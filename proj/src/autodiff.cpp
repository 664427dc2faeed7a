#include "din/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "din/errors.hpp"

namespace din::ad {

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDivideEps: return "divide_eps";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kConcat: return "concat";
    case OpKind::kStack: return "stack";
    case OpKind::kSlice: return "slice";
    case OpKind::kReshape: return "reshape";
    case OpKind::kBroadcast: return "broadcast";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kExp: return "exp";
    case OpKind::kLog1p: return "log1p";
    case OpKind::kNeg: return "neg";
    case OpKind::kSquare: return "square";
    case OpKind::kScale: return "scale";
    case OpKind::kSum: return "sum";
    case OpKind::kSumAxis: return "sum_axis";
    case OpKind::kMean: return "mean";
    case OpKind::kSoftmax: return "softmax";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph_->value(id_); }
const Tensor& Var::grad() const { return graph_->grad(id_); }

// ---------------------------------------------------------------------------
// Graph

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
  if (!value.all_finite()) throw NumericalError("constant: non-finite value");
  return push(Node{OpKind::kConstant, {}, std::move(value), {}, false, {}});
}

Var Graph::parameter(Tensor value) {
  if (!value.all_finite()) throw NumericalError("parameter: non-finite value");
  return push(Node{OpKind::kParameter, {}, std::move(value), {}, true, {}});
}

Var Graph::record(OpKind op, std::span<const Var> parents, Tensor value, BackwardFn backward) {
  if (backward_done_) throw UsageError(std::string(op_name(op)) + ": graph already differentiated; rebuild it");
  if (!value.all_finite()) {
    throw NumericalError(std::string(op_name(op)) + ": non-finite output of shape " + to_string(value.shape()));
  }
  Node node{op, {}, std::move(value), {}, false, {}};
  node.parents.reserve(parents.size());
  for (const Var& p : parents) {
    if (p.graph() != this) throw UsageError(std::string(op_name(op)) + ": operand belongs to a different graph");
    node.parents.push_back(p.id());
    node.requires_grad = node.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

const Tensor& Graph::grad(std::size_t id) const {
  Node& n = const_cast<Node&>(nodes_[id]);
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Graph::accumulate(std::size_t id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (g.size() != n.value.size()) {
    throw ShapeError("backward: gradient " + to_string(g.shape()) + " does not match value " +
                     to_string(n.value.shape()) + " of " + std::string(op_name(n.op)));
  }
  if (n.grad.empty()) {
    n.grad = Tensor(n.value.shape(), std::vector<double>(g.data().begin(), g.data().end()));
    return;
  }
  auto dst = n.grad.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Graph::backward(Var loss) {
  if (backward_done_) throw UsageError("backward: already called on this graph; rebuild the graph first");
  if (loss.graph() != this) throw UsageError("backward: loss belongs to a different graph");
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " + to_string(loss.value().shape()));
  }
  backward_done_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Tensor(nodes_[loss.id()].value.shape(), 1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

[[noreturn]] void shape_fail(OpKind op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op_name(op)) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
}

[[noreturn]] void shape_fail(OpKind op, const std::string& why, const Shape& a) {
  throw ShapeError(std::string(op_name(op)) + ": " + why + " (shape " + to_string(a) + ")");
}

void require_same(OpKind op, Var a, Var b) {
  if (a.graph() != b.graph()) throw UsageError(std::string(op_name(op)) + ": operands belong to different graphs");
  if (a.shape() != b.shape()) shape_fail(op, a.shape(), b.shape());
}

void require_rank2(OpKind op, Var a) {
  if (a.value().rank() != 2) shape_fail(op, "expected a rank-2 tensor", a.shape());
}

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

// Elementwise unary op; deriv(x, y) returns dy/dx.
template <class Fwd, class Deriv>
Var unary(OpKind op, Var a, Fwd fwd, Deriv deriv) {
  Tensor y = map(a.value(), fwd);
  const std::size_t ia = a.id();
  const std::size_t self = a.graph()->size();
  Var parents[] = {a};
  return a.graph()->record(op, parents, std::move(y), [ia, self, deriv](Graph& g, const Tensor& go) {
    const Tensor& x = g.value(ia);
    const Tensor& y = g.value(self);
    Tensor gx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] = go[i] * deriv(x[i], y[i]);
    g.accumulate(ia, gx);
  });
}

void matmul_into(const Tensor& a, const Tensor& b, Tensor& out, bool trans_a, bool trans_b) {
  // out = op(a) * op(b), op = optional transpose.
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  out = Tensor({m, n}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = trans_a ? a.at(p, i) : a.at(i, p);
      if (av == 0.0) continue;
      double* orow = &out.at(i, 0);
      if (trans_b) {
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * b.at(j, p);
      } else {
        const double* brow = b.data().data() + p * b.cols();
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise binary

Var add(Var a, Var b) {
  require_same(OpKind::kAdd, a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.graph()->record(OpKind::kAdd, parents, std::move(y), [ia, ib](Graph& g, const Tensor& go) {
    g.accumulate(ia, go);
    g.accumulate(ib, go);
  });
}

Var sub(Var a, Var b) {
  require_same(OpKind::kSub, a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.graph()->record(OpKind::kSub, parents, std::move(y), [ia, ib](Graph& g, const Tensor& go) {
    g.accumulate(ia, go);
    if (g.requires_grad(ib)) g.accumulate(ib, map(go, [](double v) { return -v; }));
  });
}

Var mul(Var a, Var b) {
  require_same(OpKind::kMul, a, b);
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.graph()->record(OpKind::kMul, parents, std::move(y), [ia, ib](Graph& g, const Tensor& go) {
    const Tensor& av = g.value(ia);
    const Tensor& bv = g.value(ib);
    if (g.requires_grad(ia)) {
      Tensor ga(av.shape());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = go[i] * bv[i];
      g.accumulate(ia, ga);
    }
    if (g.requires_grad(ib)) {
      Tensor gb(bv.shape());
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = go[i] * av[i];
      g.accumulate(ib, gb);
    }
  });
}

Var divide_eps(Var a, Var b, double eps) {
  require_same(OpKind::kDivideEps, a, b);
  if (!(eps > 0.0)) throw UsageError("divide_eps: eps must be positive");
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] / std::max(b.value()[i], eps);
  const std::size_t ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.graph()->record(OpKind::kDivideEps, parents, std::move(y), [ia, ib, eps](Graph& g, const Tensor& go) {
    const Tensor& av = g.value(ia);
    const Tensor& bv = g.value(ib);
    if (g.requires_grad(ia)) {
      Tensor ga(av.shape());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = go[i] / std::max(bv[i], eps);
      g.accumulate(ia, ga);
    }
    if (g.requires_grad(ib)) {
      // The clamp max(b, eps) is flat below eps.
      Tensor gb(bv.shape());
      for (std::size_t i = 0; i < gb.size(); ++i) {
        gb[i] = bv[i] > eps ? -go[i] * av[i] / (bv[i] * bv[i]) : 0.0;
      }
      g.accumulate(ib, gb);
    }
  });
}

// ---------------------------------------------------------------------------
// Linear algebra and layout

Var matmul(Var a, Var b) {
  require_rank2(OpKind::kMatmul, a);
  require_rank2(OpKind::kMatmul, b);
  if (a.graph() != b.graph()) throw UsageError("matmul: operands belong to different graphs");
  if (a.value().cols() != b.value().rows()) shape_fail(OpKind::kMatmul, a.shape(), b.shape());
  Tensor y;
  matmul_into(a.value(), b.value(), y, false, false);
  const std::size_t ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.graph()->record(OpKind::kMatmul, parents, std::move(y), [ia, ib](Graph& g, const Tensor& go) {
    if (g.requires_grad(ia)) {
      Tensor ga;
      matmul_into(go, g.value(ib), ga, false, true);
      g.accumulate(ia, ga);
    }
    if (g.requires_grad(ib)) {
      Tensor gb;
      matmul_into(g.value(ia), go, gb, true, false);
      g.accumulate(ib, gb);
    }
  });
}

Var transpose(Var a) {
  require_rank2(OpKind::kTranspose, a);
  const Tensor& x = a.value();
  Tensor y({x.cols(), x.rows()});
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) y.at(c, r) = x.at(r, c);
  const std::size_t ia = a.id();
  Var parents[] = {a};
  return a.graph()->record(OpKind::kTranspose, parents, std::move(y), [ia](Graph& g, const Tensor& go) {
    Tensor gx({go.cols(), go.rows()});
    for (std::size_t r = 0; r < go.rows(); ++r)
      for (std::size_t c = 0; c < go.cols(); ++c) gx.at(c, r) = go.at(r, c);
    g.accumulate(ia, gx);
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  Graph* graph = parts[0].graph();
  std::size_t rows = 0, cols = 0;
  for (const Var& p : parts) {
    require_rank2(OpKind::kConcat, p);
    const Tensor& v = p.value();
    if (axis == 0) {
      if (cols == 0 && rows == 0) cols = v.cols();
      if (v.cols() != cols) shape_fail(OpKind::kConcat, parts[0].shape(), p.shape());
      rows += v.rows();
    } else {
      if (cols == 0 && rows == 0) rows = v.rows();
      if (v.rows() != rows) shape_fail(OpKind::kConcat, parts[0].shape(), p.shape());
      cols += v.cols();
    }
  }
  Tensor y({rows, cols});
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < v.rows(); ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) {
        if (axis == 0) y.at(off + r, c) = v.at(r, c);
        else y.at(r, off + c) = v.at(r, c);
      }
    ids.push_back(p.id());
    offsets.push_back(off);
    off += axis == 0 ? v.rows() : v.cols();
  }
  return graph->record(OpKind::kConcat, parts, std::move(y),
                       [ids, offsets, axis](Graph& g, const Tensor& go) {
                         for (std::size_t k = 0; k < ids.size(); ++k) {
                           if (!g.requires_grad(ids[k])) continue;
                           const Tensor& v = g.value(ids[k]);
                           Tensor gp(v.shape());
                           for (std::size_t r = 0; r < v.rows(); ++r)
                             for (std::size_t c = 0; c < v.cols(); ++c)
                               gp.at(r, c) = axis == 0 ? go.at(offsets[k] + r, c) : go.at(r, offsets[k] + c);
                           g.accumulate(ids[k], gp);
                         }
                       });
}

Var stack(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  const Shape inner = parts[0].shape();
  const std::size_t n = numel(inner);
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  Tensor y(shape);
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].shape() != inner) shape_fail(OpKind::kStack, inner, parts[k].shape());
    std::copy(parts[k].value().data().begin(), parts[k].value().data().end(), y.data().begin() + k * n);
    ids.push_back(parts[k].id());
  }
  return parts[0].graph()->record(OpKind::kStack, parts, std::move(y), [ids, n, inner](Graph& g, const Tensor& go) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!g.requires_grad(ids[k])) continue;
      auto first = go.data().begin() + k * n;
      g.accumulate(ids[k], Tensor(inner, std::vector<double>(first, first + n)));
    }
  });
}

Var slice(Var a, std::size_t row_begin, std::size_t row_end, std::size_t col_begin, std::size_t col_end) {
  require_rank2(OpKind::kSlice, a);
  const Tensor& x = a.value();
  if (row_begin >= row_end || col_begin >= col_end || row_end > x.rows() || col_end > x.cols()) {
    shape_fail(OpKind::kSlice,
               "bad range rows [" + std::to_string(row_begin) + "," + std::to_string(row_end) + ") cols [" +
                   std::to_string(col_begin) + "," + std::to_string(col_end) + ")",
               x.shape());
  }
  Tensor y({row_end - row_begin, col_end - col_begin});
  for (std::size_t r = row_begin; r < row_end; ++r)
    for (std::size_t c = col_begin; c < col_end; ++c) y.at(r - row_begin, c - col_begin) = x.at(r, c);
  const std::size_t ia = a.id();
  const Shape src_shape = x.shape();
  Var parents[] = {a};
  return a.graph()->record(OpKind::kSlice, parents, std::move(y),
                           [ia, src_shape, row_begin, col_begin](Graph& g, const Tensor& go) {
                             Tensor gx(src_shape, 0.0);
                             for (std::size_t r = 0; r < go.rows(); ++r)
                               for (std::size_t c = 0; c < go.cols(); ++c)
                                 gx.at(row_begin + r, col_begin + c) = go.at(r, c);
                             g.accumulate(ia, gx);
                           });
}

Var reshape(Var a, Shape shape) {
  if (numel(shape) != a.value().size()) shape_fail(OpKind::kReshape, a.shape(), shape);
  Tensor y(shape, a.value().storage());
  const std::size_t ia = a.id();
  const Shape src_shape = a.shape();
  Var parents[] = {a};
  return a.graph()->record(OpKind::kReshape, parents, std::move(y), [ia, src_shape](Graph& g, const Tensor& go) {
    g.accumulate(ia, Tensor(src_shape, go.storage()));
  });
}

Var broadcast_to(Var a, Shape shape) {
  if (shape.size() != 2) shape_fail(OpKind::kBroadcast, "target must be rank 2", shape);
  const Tensor& x = a.value();
  std::size_t src_rows, src_cols;
  if (x.size() == 1) {
    src_rows = src_cols = 1;
  } else if (x.rank() == 2) {
    src_rows = x.rows();
    src_cols = x.cols();
  } else {
    shape_fail(OpKind::kBroadcast, a.shape(), shape);
  }
  if ((src_rows != 1 && src_rows != shape[0]) || (src_cols != 1 && src_cols != shape[1])) {
    shape_fail(OpKind::kBroadcast, a.shape(), shape);
  }
  Tensor y(shape);
  for (std::size_t r = 0; r < shape[0]; ++r)
    for (std::size_t c = 0; c < shape[1]; ++c)
      y.at(r, c) = x[(src_rows == 1 ? 0 : r) * src_cols + (src_cols == 1 ? 0 : c)];
  const std::size_t ia = a.id();
  const Shape src_shape = x.shape();
  Var parents[] = {a};
  return a.graph()->record(OpKind::kBroadcast, parents, std::move(y),
                           [ia, src_shape, src_rows, src_cols](Graph& g, const Tensor& go) {
                             Tensor gx(src_shape, 0.0);
                             for (std::size_t r = 0; r < go.rows(); ++r)
                               for (std::size_t c = 0; c < go.cols(); ++c)
                                 gx[(src_rows == 1 ? 0 : r) * src_cols + (src_cols == 1 ? 0 : c)] += go.at(r, c);
                             g.accumulate(ia, gx);
                           });
}

// ---------------------------------------------------------------------------
// Elementwise unary

Var sigmoid(Var a) {
  return unary(
      OpKind::kSigmoid, a,
      [](double x) {
        // Branch keeps exp() from overflowing for large |x|.
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(OpKind::kTanh, a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(OpKind::kExp, a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log1p(Var a) {
  for (double v : a.value().data())
    if (!(v > -1.0)) throw NumericalError("log1p: argument must exceed -1");
  return unary(OpKind::kLog1p, a, [](double x) { return std::log1p(x); },
               [](double x, double) { return 1.0 / (1.0 + x); });
}

Var neg(Var a) {
  return unary(OpKind::kNeg, a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var square(Var a) {
  return unary(OpKind::kSquare, a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var scale(Var a, double factor) {
  return unary(OpKind::kScale, a, [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  const Shape src_shape = a.shape();
  Var parents[] = {a};
  return a.graph()->record(OpKind::kSum, parents, Tensor::scalar(s), [ia, src_shape](Graph& g, const Tensor& go) {
    g.accumulate(ia, Tensor(src_shape, go.item()));
  });
}

Var sum(Var a, int axis) {
  require_rank2(OpKind::kSumAxis, a);
  if (axis != 0 && axis != 1) throw ShapeError("sum_axis: axis must be 0 or 1");
  const Tensor& x = a.value();
  Tensor y(axis == 0 ? Shape{1, x.cols()} : Shape{x.rows(), 1}, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) y[axis == 0 ? c : r] += x.at(r, c);
  const std::size_t ia = a.id();
  const Shape src_shape = x.shape();
  Var parents[] = {a};
  return a.graph()->record(OpKind::kSumAxis, parents, std::move(y), [ia, src_shape, axis](Graph& g, const Tensor& go) {
    Tensor gx(src_shape);
    for (std::size_t r = 0; r < src_shape[0]; ++r)
      for (std::size_t c = 0; c < src_shape[1]; ++c) gx.at(r, c) = go[axis == 0 ? c : r];
    g.accumulate(ia, gx);
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  const Shape src_shape = a.shape();
  Var parents[] = {a};
  return a.graph()->record(OpKind::kMean, parents, Tensor::scalar(s / n), [ia, src_shape, n](Graph& g, const Tensor& go) {
    g.accumulate(ia, Tensor(src_shape, go.item() / n));
  });
}

Var softmax(Var a, int axis) {
  require_rank2(OpKind::kSoftmax, a);
  if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
  const Tensor& x = a.value();
  const std::size_t outer = axis == 1 ? x.rows() : x.cols();
  const std::size_t inner = axis == 1 ? x.cols() : x.rows();
  auto index = [axis](std::size_t o, std::size_t i) { return axis == 1 ? std::pair{o, i} : std::pair{i, o}; };
  Tensor y(x.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inner; ++i) {
      auto [r, c] = index(o, i);
      mx = std::max(mx, x.at(r, c));
    }
    double z = 0.0;
    for (std::size_t i = 0; i < inner; ++i) {
      auto [r, c] = index(o, i);
      y.at(r, c) = std::exp(x.at(r, c) - mx);
      z += y.at(r, c);
    }
    for (std::size_t i = 0; i < inner; ++i) {
      auto [r, c] = index(o, i);
      y.at(r, c) /= z;
    }
  }
  const std::size_t ia = a.id();
  const std::size_t self = a.graph()->size();
  Var parents[] = {a};
  return a.graph()->record(OpKind::kSoftmax, parents, std::move(y),
                           [ia, self, outer, inner, index](Graph& g, const Tensor& go) {
                             const Tensor& yv = g.value(self);
                             Tensor gx(yv.shape());
                             for (std::size_t o = 0; o < outer; ++o) {
                               double dot = 0.0;
                               for (std::size_t i = 0; i < inner; ++i) {
                                 auto [r, c] = index(o, i);
                                 dot += go.at(r, c) * yv.at(r, c);
                               }
                               for (std::size_t i = 0; i < inner; ++i) {
                                 auto [r, c] = index(o, i);
                                 gx.at(r, c) = yv.at(r, c) * (go.at(r, c) - dot);
                               }
                             }
                             g.accumulate(ia, gx);
                           });
}

}  // namespace din::ad
