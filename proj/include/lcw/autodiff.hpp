#pragma once

// Define-by-run reverse-mode differentiation over dense Tensors.
//
// Each operation returns a Var holding its value plus, when any input needs
// gradients, the parents and a rule that pushes the output gradient back into
// them. backward() on a scalar Var walks the recorded graph once in reverse
// topological order.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lcw/tensor.hpp"

namespace lcw::ad {

struct Node {
  Tensor value;
  Tensor grad;  // empty until first touched
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;
  bool leaf = true;

  /// Gradient storage shaped like `value`, allocated on first use.
  Tensor& grad_buffer();
};

/// Handle to a node of the computation graph (a "DiffValue").
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  /// In-place parameter updates go through here.
  Tensor& mutable_value() { return node_->value; }
  /// Gradient accumulated by backward(); zeros if never touched.
  const Tensor& grad() const { return node_->grad_buffer(); }
  void zero_grad() const;
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }

  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double item() const { return value().item(); }

  const std::shared_ptr<Node>& node() const { return node_; }
  static Var from_node(std::shared_ptr<Node> n);

 private:
  std::shared_ptr<Node> node_;
};

/// Trainable leaf.
Var parameter(Tensor value);
/// Leaf that never receives gradient.
Var constant(Tensor value);
/// Same value as `x`, cut off from the graph.
Var detach(const Var& x);

enum class UnaryOp { relu, sigmoid, tanh, sqrt, reciprocal, log, square, exp };
enum class BinaryOp { add, sub, mul };

Var elementwise(UnaryOp op, const Var& x);
/// Broadcasting is limited to scalar-with-anything and row-vector-with-matrix.
Var elementwise(BinaryOp op, const Var& a, const Var& b);

inline Var relu(const Var& x) { return elementwise(UnaryOp::relu, x); }
inline Var sigmoid(const Var& x) { return elementwise(UnaryOp::sigmoid, x); }
inline Var tanh(const Var& x) { return elementwise(UnaryOp::tanh, x); }
inline Var sqrt(const Var& x) { return elementwise(UnaryOp::sqrt, x); }
inline Var reciprocal(const Var& x) { return elementwise(UnaryOp::reciprocal, x); }
inline Var log(const Var& x) { return elementwise(UnaryOp::log, x); }
inline Var square(const Var& x) { return elementwise(UnaryOp::square, x); }
inline Var exp(const Var& x) { return elementwise(UnaryOp::exp, x); }
inline Var add(const Var& a, const Var& b) { return elementwise(BinaryOp::add, a, b); }
inline Var sub(const Var& a, const Var& b) { return elementwise(BinaryOp::sub, a, b); }
inline Var mul(const Var& a, const Var& b) { return elementwise(BinaryOp::mul, a, b); }

/// x * c and x + c for a constant c.
Var scale(const Var& x, double c);
Var shift(const Var& x, double c);

Var matmul(const Var& a, const Var& b);

enum class ReduceOp { sum, mean };
/// Full reduction gives a rank-0 scalar; axis 0 gives 1xC, axis 1 gives Rx1.
Var reduce(ReduceOp op, const Var& x, std::optional<int> axis = std::nullopt);
inline Var sum(const Var& x, std::optional<int> axis = std::nullopt) {
  return reduce(ReduceOp::sum, x, axis);
}
inline Var mean(const Var& x, std::optional<int> axis = std::nullopt) {
  return reduce(ReduceOp::mean, x, axis);
}

/// out(i, j) = |a_i - b_j|^2, computed from coordinate differences so it is
/// never negative and the diagonal of pairwise_sq_dists(X, X) is exactly 0.
Var pairwise_sq_dists(const Var& a, const Var& b);

/// Sorts every column ascending. The permutation is fixed in the forward
/// pass; backward scatters gradients through it.
Var sort_columns(const Var& x);

/// log(max(x, floor)); gradient is zero where the floor is active.
Var log_clamped(const Var& x, double floor);

enum class Mode { train, eval };

struct BatchNormState {
  Var gamma;  // 1 x d, init 1
  Var beta;   // 1 x d, init 0
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  static BatchNormState make(std::size_t dim);
};

/// Train mode normalizes with batch statistics (biased variance) and
/// updates the running estimates; eval mode uses the running estimates.
Var batchnorm(const Var& x, BatchNormState& state, Mode mode);

/// Accumulates d(root)/d(node) into every reachable node requiring grad.
/// Leaf gradients accumulate across calls; interior ones are recomputed.
void backward(const Var& root);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// One bias-corrected Adam update of `params` using `grads`.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, double lr);
/// Convenience overload reading gradients from the parameters themselves.
void adam_step(std::span<const Var> params, AdamState& state, double lr);

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(std::span<const Var> params, double max_norm);

}  // namespace lcw::ad
