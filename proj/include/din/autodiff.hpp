#pragma once

// Define-by-run reverse-mode automatic differentiation over dense tensors.
//
// A Graph owns every node created while evaluating an expression. Nodes are
// appended in creation order, which is already a topological order, so the
// backward pass is a single reverse sweep. Build a fresh Graph per forward
// pass; a graph supports exactly one call to backward().

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "din/tensor.hpp"

namespace din::ad {

/// Guard used by divide_eps: a / max(b, eps).
inline constexpr double kDivEpsilon = 1e-8;

enum class OpKind {
  kConstant,
  kParameter,
  kAdd,
  kSub,
  kMul,
  kDivideEps,
  kMatmul,
  kTranspose,
  kConcat,
  kStack,
  kSlice,
  kReshape,
  kBroadcast,
  kSigmoid,
  kTanh,
  kExp,
  kLog1p,
  kNeg,
  kSquare,
  kScale,
  kSum,
  kSumAxis,
  kMean,
  kSoftmax,
};

std::string_view op_name(OpKind op);

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while its graph lives.
class Var {
 public:
  Var() = default;

  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor& value() const;
  /// Gradient accumulated by Graph::backward(); zeros if the node did not
  /// influence the loss.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  /// Propagates the node's output gradient into its parents via accumulate().
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// A leaf that receives a gradient in backward().
  Var parameter(Tensor value);

  void backward(Var loss);
  bool backward_done() const { return backward_done_; }

  std::size_t size() const { return nodes_.size(); }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Used by op implementations.
  Var record(OpKind op, std::span<const Var> parents, Tensor value, BackwardFn backward);
  void accumulate(std::size_t id, const Tensor& g);

 private:
  struct Node {
    OpKind op;
    std::vector<std::size_t> parents;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Elementwise binary ops require identical shapes; use broadcast_to first.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// a / max(b, eps). Never divides by anything smaller than eps.
Var divide_eps(Var a, Var b, double eps = kDivEpsilon);

Var matmul(Var a, Var b);
Var transpose(Var a);
/// Rank-2 concatenation along axis 0 (rows) or 1 (columns).
Var concat(std::span<const Var> parts, int axis);
/// Stacks same-shaped tensors along a new leading axis.
Var stack(std::span<const Var> parts);
/// Rank-2 sub-block [row_begin, row_end) x [col_begin, col_end).
Var slice(Var a, std::size_t row_begin, std::size_t row_end, std::size_t col_begin, std::size_t col_end);
Var reshape(Var a, Shape shape);
/// Expands size-1 dimensions of a rank-2 tensor (or a single element) to `shape`.
Var broadcast_to(Var a, Shape shape);

Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log1p(Var a);
Var neg(Var a);
Var square(Var a);
Var scale(Var a, double factor);

/// Sum of all elements, as a 1x1 tensor.
Var sum(Var a);
/// Rank-2 reduction: axis 0 gives 1xN, axis 1 gives Mx1.
Var sum(Var a, int axis);
Var mean(Var a);
/// Numerically stable softmax along axis 0 or 1 of a rank-2 tensor.
Var softmax(Var a, int axis);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace din::ad
