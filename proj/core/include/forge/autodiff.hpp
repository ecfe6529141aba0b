#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "forge/kernels.hpp"
#include "forge/tensor.hpp"

namespace forge {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

class Gradients;

/// Reverse-mode gradient tape.
///
/// Every operation appends a node holding its forward value; node ids are
/// therefore a topological order and backward() walks them in reverse,
/// visiting each node once. A tape supports a single backward pass.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input; backward() returns its gradient.
  Var leaf(Tensor value);
  /// Value that takes part in the computation but is never differentiated.
  Var constant(Tensor value);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var matmul(Var a, Var b);
  /// x · Wᵀ + bias
  Var linear(Var x, Var weights, Var bias);
  Var add_bias(Var x, Var bias);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var relu(Var x);
  Var silu(Var x);
  Var gelu(Var x);
  /// forge_apply with a fixed threshold; gradient passes where kept.
  Var forge(Var x, double threshold);
  Var gather(Var x, std::vector<std::int64_t> index, Shape out_shape);
  Var reshape(Var x, Shape shape);
  Var conv2d(Var x, Var kernels, Var bias, const kernels::ConvGeometry& g);
  Var sum(Var x);
  /// Softmax cross-entropy of logits[N×C] against labels, summed or averaged over rows.
  Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels, bool mean);
  /// Per-row margin max(z_y - max_{j≠y} z_j, -kappa) as an [N] vector.
  Var margin(Var logits, std::span<const std::size_t> labels, double kappa);

  /// Gradient of the scalar `loss` with respect to every leaf.
  /// Throws ContractError for a non-scalar loss or a second call.
  Gradients backward(Var loss);

 private:
  using Backward = std::function<void(const Tensor& out_adjoint, std::vector<std::optional<Tensor>>& adjoints)>;

  struct Node {
    Tensor value;
    bool requires_grad = false;
    bool is_leaf = false;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad, Backward backward);
  bool needs(Var v) const { return nodes_.at(v.id).requires_grad; }

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// Gradients produced by Tape::backward, indexed by leaf Var.
class Gradients {
 public:
  /// Gradient of a leaf; zeros when the loss does not depend on it.
  const Tensor& operator[](Var v) const;
  bool contains(Var v) const;

 private:
  friend class Tape;
  std::vector<std::optional<Tensor>> grads_;
};

}  // namespace forge
