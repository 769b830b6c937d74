#include "lcw/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>

#include "lcw/error.hpp"
#include "lcw/parallel.hpp"

namespace lcw::ad {

Tensor& Node::grad_buffer() {
  if (grad.size() != value.size() || grad.shape != value.shape) {
    grad = Tensor::zeros(value.shape);
  }
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->leaf = true;
}

void Var::zero_grad() const {
  if (!node_) return;
  auto& g = node_->grad_buffer();
  std::fill(g.data.begin(), g.data.end(), 0.0);
}

Var Var::from_node(std::shared_ptr<Node> n) {
  Var v;
  v.node_ = std::move(n);
  return v;
}

Var parameter(Tensor value) { return Var(std::move(value), true); }
Var constant(Tensor value) { return Var(std::move(value), false); }
Var detach(const Var& x) { return Var(x.value(), false); }

namespace {

Var make_result(Tensor value, std::initializer_list<const Var*> inputs,
                std::function<void(Node&)> rule) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->leaf = false;
  bool needs = false;
  for (const Var* v : inputs) needs = needs || v->requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const Var* v : inputs) node->parents.push_back(v->node());
    node->backward_fn = std::move(rule);
  }
  return Var::from_node(std::move(node));
}

void add_into(Node& target, const Tensor& g) {
  if (!target.requires_grad) return;
  auto& buf = target.grad_buffer();
  for (std::size_t k = 0; k < g.size(); ++k) buf.data[k] += g.data[k];
}

// How an operand is read when producing an element of the output.
enum class Broadcast { same, scalar, row };

Broadcast classify(const Tensor& operand, const Tensor& out) {
  if (operand.shape == out.shape) return Broadcast::same;
  if (operand.size() == 1) return Broadcast::scalar;
  return Broadcast::row;
}

std::vector<std::size_t> broadcast_shape(const Tensor& a, const Tensor& b) {
  if (a.shape == b.shape) return a.shape;
  if (b.size() == 1) return a.shape;
  if (a.size() == 1) return b.shape;
  if (a.rank() == 2 && b.rows() == 1 && b.cols() == a.cols()) return a.shape;
  if (b.rank() == 2 && a.rows() == 1 && a.cols() == b.cols()) return b.shape;
  throw ShapeError("shapes are not broadcast-compatible: " + shape_string(a.shape) + " and " +
                   shape_string(b.shape));
}

inline std::size_t source_index(Broadcast kind, std::size_t k, std::size_t cols) {
  switch (kind) {
    case Broadcast::same:
      return k;
    case Broadcast::scalar:
      return 0;
    case Broadcast::row:
      return k % cols;
  }
  return k;
}

// Adds g (output-shaped) into `target`, summing over broadcast dimensions.
void add_broadcast(Node& target, const Tensor& g, Broadcast kind) {
  if (!target.requires_grad) return;
  auto& buf = target.grad_buffer();
  const std::size_t cols = g.cols();
  for (std::size_t k = 0; k < g.size(); ++k) buf.data[source_index(kind, k, cols)] += g.data[k];
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var elementwise(UnaryOp op, const Var& x) {
  const Tensor& in = x.value();
  Tensor out = Tensor::zeros(in.shape);
  for (std::size_t k = 0; k < in.size(); ++k) {
    double v = in.data[k];
    double r = 0.0;
    switch (op) {
      case UnaryOp::relu:
        r = v > 0.0 ? v : 0.0;
        break;
      case UnaryOp::sigmoid:
        r = stable_sigmoid(v);
        break;
      case UnaryOp::tanh:
        r = std::tanh(v);
        break;
      case UnaryOp::sqrt:
        if (v < 0.0) throw DomainError("sqrt of negative value " + std::to_string(v));
        r = std::sqrt(v);
        break;
      case UnaryOp::reciprocal:
        r = 1.0 / v;
        break;
      case UnaryOp::log:
        if (v < 0.0) throw DomainError("log of negative value " + std::to_string(v));
        r = std::log(v);
        break;
      case UnaryOp::square:
        r = v * v;
        break;
      case UnaryOp::exp:
        r = std::exp(v);
        break;
    }
    out.data[k] = r;
  }
  return make_result(std::move(out), {&x}, [op](Node& self) {
    Node& p = *self.parents[0];
    const Tensor& g = self.grad;
    const Tensor& y = self.value;
    const Tensor& in = p.value;
    Tensor d = Tensor::zeros(in.shape);
    for (std::size_t k = 0; k < in.size(); ++k) {
      double gk = g.data[k];
      switch (op) {
        case UnaryOp::relu:
          d.data[k] = in.data[k] > 0.0 ? gk : 0.0;
          break;
        case UnaryOp::sigmoid:
          d.data[k] = gk * y.data[k] * (1.0 - y.data[k]);
          break;
        case UnaryOp::tanh:
          d.data[k] = gk * (1.0 - y.data[k] * y.data[k]);
          break;
        case UnaryOp::sqrt:
          d.data[k] = gk * 0.5 / y.data[k];
          break;
        case UnaryOp::reciprocal:
          d.data[k] = -gk * y.data[k] * y.data[k];
          break;
        case UnaryOp::log:
          d.data[k] = gk / in.data[k];
          break;
        case UnaryOp::square:
          d.data[k] = 2.0 * in.data[k] * gk;
          break;
        case UnaryOp::exp:
          d.data[k] = gk * y.data[k];
          break;
      }
    }
    add_into(p, d);
  });
}

Var elementwise(BinaryOp op, const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = Tensor::zeros(broadcast_shape(av, bv));
  const Broadcast ka = classify(av, out);
  const Broadcast kb = classify(bv, out);
  const std::size_t cols = out.cols();
  for (std::size_t k = 0; k < out.size(); ++k) {
    double x = av.data[source_index(ka, k, cols)];
    double y = bv.data[source_index(kb, k, cols)];
    switch (op) {
      case BinaryOp::add:
        out.data[k] = x + y;
        break;
      case BinaryOp::sub:
        out.data[k] = x - y;
        break;
      case BinaryOp::mul:
        out.data[k] = x * y;
        break;
    }
  }
  return make_result(std::move(out), {&a, &b}, [op, ka, kb](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const Tensor& g = self.grad;
    const std::size_t cols = g.cols();
    switch (op) {
      case BinaryOp::add:
        add_broadcast(pa, g, ka);
        add_broadcast(pb, g, kb);
        break;
      case BinaryOp::sub: {
        add_broadcast(pa, g, ka);
        Tensor neg = g;
        for (auto& v : neg.data) v = -v;
        add_broadcast(pb, neg, kb);
        break;
      }
      case BinaryOp::mul: {
        Tensor ga = Tensor::zeros(g.shape);
        Tensor gb = Tensor::zeros(g.shape);
        for (std::size_t k = 0; k < g.size(); ++k) {
          ga.data[k] = g.data[k] * pb.value.data[source_index(kb, k, cols)];
          gb.data[k] = g.data[k] * pa.value.data[source_index(ka, k, cols)];
        }
        add_broadcast(pa, ga, ka);
        add_broadcast(pb, gb, kb);
        break;
      }
    }
  });
}

Var scale(const Var& x, double c) { return mul(x, constant(Tensor::scalar(c))); }
Var shift(const Var& x, double c) { return add(x, constant(Tensor::scalar(c))); }

Var matmul(const Var& a, const Var& b) {
  if (a.value().rank() != 2 || b.value().rank() != 2) {
    throw ShapeError("matmul expects matrices, got " + shape_string(a.value().shape) + " and " +
                     shape_string(b.value().shape));
  }
  Tensor out = matmul_raw(a.value(), b.value());
  return make_result(std::move(out), {&a, &b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) add_into(pa, matmul_raw(self.grad, pb.value, false, true));
    if (pb.requires_grad) add_into(pb, matmul_raw(pa.value, self.grad, true, false));
  });
}

Var reduce(ReduceOp op, const Var& x, std::optional<int> axis) {
  const Tensor& in = x.value();
  const std::size_t r = in.rows();
  const std::size_t c = in.cols();
  Tensor out;
  double divisor = 1.0;
  if (!axis) {
    double s = 0.0;
    for (double v : in.data) s += v;
    divisor = op == ReduceOp::mean ? static_cast<double>(in.size()) : 1.0;
    out = Tensor::scalar(s / divisor);
  } else if (*axis == 0) {
    out = Tensor::zeros({1, c});
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) out.data[j] += in(i, j);
    }
    divisor = op == ReduceOp::mean ? static_cast<double>(r) : 1.0;
    for (auto& v : out.data) v /= divisor;
  } else if (*axis == 1) {
    out = Tensor::zeros({r, 1});
    for (std::size_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += in(i, j);
      out.data[i] = s;
    }
    divisor = op == ReduceOp::mean ? static_cast<double>(c) : 1.0;
    for (auto& v : out.data) v /= divisor;
  } else {
    throw ShapeError("reduce axis must be 0 or 1, got " + std::to_string(*axis));
  }
  return make_result(std::move(out), {&x}, [axis, divisor](Node& self) {
    Node& p = *self.parents[0];
    const Tensor& g = self.grad;
    Tensor d = Tensor::zeros(p.value.shape);
    const std::size_t c = p.value.cols();
    for (std::size_t k = 0; k < d.size(); ++k) {
      double gk = !axis ? g.data[0] : (*axis == 0 ? g.data[k % c] : g.data[k / c]);
      d.data[k] = gk / divisor;
    }
    add_into(p, d);
  });
}

Var pairwise_sq_dists(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw ShapeError("pairwise_sq_dists dimension mismatch: " + shape_string(av.shape) + " vs " +
                     shape_string(bv.shape));
  }
  const std::size_t n = av.rows();
  const std::size_t m = bv.rows();
  const std::size_t dim = av.cols();
  Tensor out = Tensor::zeros({n, m});
  parallel_blocks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* ai = av.data.data() + i * dim;
      for (std::size_t j = 0; j < m; ++j) {
        const double* bj = bv.data.data() + j * dim;
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          double t = ai[d] - bj[d];
          s += t * t;
        }
        out.data[i * m + j] = s;
      }
    }
  });
  return make_result(std::move(out), {&a, &b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const Tensor& g = self.grad;
    const std::size_t n = g.rows();
    const std::size_t m = g.cols();
    // d/da_i = 2 sum_j g_ij (a_i - b_j);  d/db_j = -2 sum_i g_ij (a_i - b_j)
    if (pa.requires_grad) {
      Tensor ga = matmul_raw(g, pb.value);
      const std::size_t dim = ga.cols();
      for (std::size_t i = 0; i < n; ++i) {
        double rs = 0.0;
        for (std::size_t j = 0; j < m; ++j) rs += g(i, j);
        for (std::size_t d = 0; d < dim; ++d) ga(i, d) = 2.0 * (rs * pa.value(i, d) - ga(i, d));
      }
      add_into(pa, ga);
    }
    if (pb.requires_grad) {
      Tensor gb = matmul_raw(g, pa.value, true, false);
      const std::size_t dim = gb.cols();
      std::vector<double> cs(m, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) cs[j] += g(i, j);
      }
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t d = 0; d < dim; ++d) gb(j, d) = 2.0 * (cs[j] * pb.value(j, d) - gb(j, d));
      }
      add_into(pb, gb);
    }
  });
}

Var sort_columns(const Var& x) {
  const Tensor& in = x.value();
  const std::size_t r = in.rows();
  const std::size_t c = in.cols();
  Tensor out = Tensor::zeros(in.shape);
  auto perm = std::make_shared<std::vector<std::size_t>>(r * c);
  std::vector<std::size_t> idx(r);
  for (std::size_t j = 0; j < c; ++j) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t p, std::size_t q) { return in(p, j) < in(q, j); });
    for (std::size_t i = 0; i < r; ++i) {
      out.data[i * c + j] = in(idx[i], j);
      (*perm)[i * c + j] = idx[i];
    }
  }
  return make_result(std::move(out), {&x}, [perm](Node& self) {
    Node& p = *self.parents[0];
    const Tensor& g = self.grad;
    const std::size_t c = g.cols();
    Tensor d = Tensor::zeros(p.value.shape);
    for (std::size_t k = 0; k < g.size(); ++k) d.data[(*perm)[k] * c + k % c] += g.data[k];
    add_into(p, d);
  });
}

Var log_clamped(const Var& x, double floor) {
  const Tensor& in = x.value();
  Tensor out = Tensor::zeros(in.shape);
  for (std::size_t k = 0; k < in.size(); ++k) out.data[k] = std::log(std::max(in.data[k], floor));
  return make_result(std::move(out), {&x}, [floor](Node& self) {
    Node& p = *self.parents[0];
    Tensor d = Tensor::zeros(p.value.shape);
    for (std::size_t k = 0; k < d.size(); ++k) {
      double v = p.value.data[k];
      d.data[k] = v > floor ? self.grad.data[k] / v : 0.0;
    }
    add_into(p, d);
  });
}

BatchNormState BatchNormState::make(std::size_t dim) {
  BatchNormState s;
  s.gamma = parameter(Tensor::full({1, dim}, 1.0));
  s.beta = parameter(Tensor::zeros({1, dim}));
  s.running_mean = Tensor::zeros({1, dim});
  s.running_var = Tensor::full({1, dim}, 1.0);
  return s;
}

Var batchnorm(const Var& x, BatchNormState& state, Mode mode) {
  const Tensor& in = x.value();
  if (in.rank() != 2) throw ShapeError("batchnorm expects an n x d matrix");
  const std::size_t n = in.rows();
  const std::size_t d = in.cols();
  if (state.gamma.value().cols() != d) {
    throw ShapeError("batchnorm feature count " + std::to_string(d) + " does not match state " +
                     std::to_string(state.gamma.value().cols()));
  }
  if (mode == Mode::train && n < 2) {
    throw ShapeError("batchnorm in train mode needs at least 2 rows, got " + std::to_string(n));
  }
  const Tensor& gamma = state.gamma.value();
  const Tensor& beta = state.beta.value();

  auto normalized = std::make_shared<Tensor>(Tensor::zeros(in.shape));
  auto inv_std = std::make_shared<std::vector<double>>(d);
  std::vector<double> mu(d, 0.0);
  std::vector<double> var(d, 0.0);
  if (mode == Mode::train) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) mu[j] += in(i, j);
    }
    for (auto& v : mu) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double t = in(i, j) - mu[j];
        var[j] += t * t;
      }
    }
    for (auto& v : var) v /= static_cast<double>(n);
    // Running variance uses the unbiased estimate, as in common frameworks.
    const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < d; ++j) {
      state.running_mean.data[j] =
          (1.0 - state.momentum) * state.running_mean.data[j] + state.momentum * mu[j];
      state.running_var.data[j] =
          (1.0 - state.momentum) * state.running_var.data[j] + state.momentum * var[j] * unbias;
    }
  } else {
    mu = state.running_mean.data;
    var = state.running_var.data;
  }
  for (std::size_t j = 0; j < d; ++j) (*inv_std)[j] = 1.0 / std::sqrt(var[j] + state.eps);

  Tensor out = Tensor::zeros(in.shape);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double h = (in(i, j) - mu[j]) * (*inv_std)[j];
      (*normalized)(i, j) = h;
      out(i, j) = gamma.data[j] * h + beta.data[j];
    }
  }
  const bool batch_stats = mode == Mode::train;
  return make_result(
      std::move(out), {&x, &state.gamma, &state.beta},
      [normalized, inv_std, batch_stats](Node& self) {
        Node& px = *self.parents[0];
        Node& pg = *self.parents[1];
        Node& pb = *self.parents[2];
        const Tensor& g = self.grad;
        const Tensor& h = *normalized;
        const std::size_t n = g.rows();
        const std::size_t d = g.cols();
        std::vector<double> sum_g(d, 0.0);
        std::vector<double> sum_gh(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < d; ++j) {
            sum_g[j] += g(i, j);
            sum_gh[j] += g(i, j) * h(i, j);
          }
        }
        if (pg.requires_grad) add_into(pg, Tensor::matrix(1, d, sum_gh));
        if (pb.requires_grad) add_into(pb, Tensor::matrix(1, d, sum_g));
        if (!px.requires_grad) return;
        const Tensor& gamma = pg.value;
        Tensor dx = Tensor::zeros(g.shape);
        const double nn = static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < d; ++j) {
            double scale = gamma.data[j] * (*inv_std)[j];
            if (batch_stats) {
              dx(i, j) = scale * (g(i, j) - sum_g[j] / nn - h(i, j) * sum_gh[j] / nn);
            } else {
              dx(i, j) = scale * g(i, j);
            }
          }
        }
        add_into(px, dx);
      });
}

void backward(const Var& root) {
  if (!root.defined()) throw ShapeError("backward on an undefined value");
  if (root.value().size() != 1) {
    throw ShapeError("backward needs a scalar root, got " + shape_string(root.value().shape));
  }
  if (!root.requires_grad()) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order) {
    if (!n->leaf) n->grad = Tensor::zeros(n->value.shape);
  }
  root.node()->grad_buffer().data[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: params/grads count mismatch");
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.push_back(Tensor::zeros(p->shape));
      state.second_moment.push_back(Tensor::zeros(p->shape));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks a different parameter count");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = *grads[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    if (!p.same_shape(g) || !p.same_shape(m)) {
      throw ShapeError("adam_step: shape mismatch for parameter " + std::to_string(k));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.data[i];
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * gi;
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * gi * gi;
      const double mhat = m.data[i] / c1;
      const double vhat = v.data[i] / c2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

void adam_step(std::span<const Var> params, AdamState& state, double lr) {
  std::vector<Tensor*> values;
  std::vector<const Tensor*> grads;
  values.reserve(params.size());
  grads.reserve(params.size());
  for (const Var& p : params) {
    values.push_back(&p.node()->value);
    grads.push_back(&p.node()->grad_buffer());
  }
  adam_step(std::span<Tensor* const>(values), std::span<const Tensor* const>(grads), state, lr);
}

double clip_grad_norm(std::span<const Var> params, double max_norm) {
  double sq = 0.0;
  for (const Var& p : params) {
    for (double g : p.node()->grad_buffer().data) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (const Var& p : params) {
      for (double& g : p.node()->grad_buffer().data) g *= f;
    }
  }
  return norm;
}

}  // namespace lcw::ad
