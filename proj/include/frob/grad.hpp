// Minimal reverse-mode automatic differentiation over small dense tensors.
//
// A Tensor is a shared handle to a node. Every primitive applied to an
// operand that requires grad appends a node holding its parents and a
// closure that maps the output gradient onto the parents. Node ids grow
// monotonically, so sorting reachable nodes by descending id is a valid
// reverse topological order.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace frob {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Primitive {
  leaf,
  add,
  sub,
  mul,
  scalar_mul,
  scalar_add,
  matmul,
  transpose,
  relu,
  tanh,
  exp,
  log,
  clamp_min,
  log_sum_exp,
  reduce_mean,
  reduce_sum,
  l2_norm_of_difference,
  max,
  pick,
};

inline std::string_view primitive_name(Primitive kind) {
  switch (kind) {
    case Primitive::leaf: return "leaf";
    case Primitive::add: return "add";
    case Primitive::sub: return "sub";
    case Primitive::mul: return "mul";
    case Primitive::scalar_mul: return "scalar_mul";
    case Primitive::scalar_add: return "scalar_add";
    case Primitive::matmul: return "matmul";
    case Primitive::transpose: return "transpose";
    case Primitive::relu: return "relu";
    case Primitive::tanh: return "tanh";
    case Primitive::exp: return "exp";
    case Primitive::log: return "log";
    case Primitive::clamp_min: return "clamp_min";
    case Primitive::log_sum_exp: return "log_sum_exp";
    case Primitive::reduce_mean: return "reduce_mean";
    case Primitive::reduce_sum: return "reduce_sum";
    case Primitive::l2_norm_of_difference: return "l2_norm_of_difference";
    case Primitive::max: return "max";
    case Primitive::pick: return "pick";
  }
  return "unknown";
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

namespace detail {

inline std::uint64_t next_node_id() {
  static std::atomic<std::uint64_t> counter{0};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace detail

/// One node of the computation record. Leaves have no parents and no
/// backward closure.
struct ComputationRecord {
  std::uint64_t id = detail::next_node_id();
  Primitive kind = Primitive::leaf;
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;
  std::vector<std::shared_ptr<ComputationRecord>> parents;
  // Distributes this node's grad onto its parents' grads.
  std::function<void(ComputationRecord&)> backward;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false)
      : node_(std::make_shared<ComputationRecord>()) {
    for (auto dim : shape) {
      if (dim == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
    }
    if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
    if (shape_size(shape) != data.size()) {
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_string(shape));
    }
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    set_requires_grad(requires_grad);
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor filled(Shape shape, double value) {
    auto n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return Tensor({1}, {value}, requires_grad);
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false) {
    return Tensor({rows, cols}, std::move(data), requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  std::size_t rows() const { return node_->shape[0]; }
  std::size_t cols() const { return rank() > 1 ? node_->shape[1] : 1; }

  std::span<const double> data() const { return node_->data; }
  // Only meaningful on leaves; the optimizer writes parameters through it.
  std::span<double> mutable_data() { return node_->data; }

  double item() const {
    if (size() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_string(shape()));
    return node_->data[0];
  }
  double at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) {
    node_->requires_grad = flag;
    if (flag) {
      node_->ensure_grad();
    } else {
      node_->grad.clear();
    }
  }

  bool has_grad() const { return node_->requires_grad && node_->grad.size() == node_->data.size(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad() {
    if (node_->requires_grad) node_->grad.assign(node_->data.size(), 0.0);
  }

  bool is_leaf() const { return node_->kind == Primitive::leaf; }
  Primitive kind() const { return node_->kind; }
  std::uint64_t id() const { return node_->id; }

  /// Copy of the values with no history.
  Tensor detach() const { return Tensor(shape(), node_->data); }

  /// Accumulates d(this)/d(leaf) into every grad-tracking leaf reachable
  /// from this scalar.
  void backward() const;

  const std::shared_ptr<ComputationRecord>& node() const { return node_; }

  static Tensor from_node(std::shared_ptr<ComputationRecord> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<ComputationRecord> node_;
};

namespace detail {

inline Tensor make_result(Primitive kind, Shape shape, std::vector<double> data,
                          std::vector<Tensor> const& operands,
                          std::function<void(ComputationRecord&)> backward) {
  auto node = std::make_shared<ComputationRecord>();
  node->kind = kind;
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool tracked = false;
  for (const auto& op : operands) tracked = tracked || op.requires_grad();
  if (tracked) {
    node->requires_grad = true;
    for (const auto& op : operands) node->parents.push_back(op.node());
    node->backward = std::move(backward);
  }
  return Tensor::from_node(std::move(node));
}

[[noreturn]] inline void shape_mismatch(Primitive kind, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(primitive_name(kind)) + ": incompatible shapes " +
                   shape_string(a) + " and " + shape_string(b));
}

// b broadcasts over a's leading (batch) dimension when b's shape equals a's
// trailing shape, or equals a's shape with the leading dimension set to 1.
inline bool broadcasts_over_batch(const Shape& a, const Shape& b) {
  if (a == b) return false;
  if (a.size() < 2) return false;
  Shape trailing(a.begin() + 1, a.end());
  if (b == trailing) return true;
  Shape leading_one = a;
  leading_one[0] = 1;
  return b == leading_one;
}

template <class Forward, class PartialA, class PartialB>
Tensor elementwise_binary(Primitive kind, const Tensor& a, const Tensor& b, Forward forward,
                          PartialA partial_a, PartialB partial_b) {
  bool broadcast = broadcasts_over_batch(a.shape(), b.shape());
  if (!broadcast && a.shape() != b.shape()) shape_mismatch(kind, a.shape(), b.shape());
  const std::size_t n = a.size();
  const std::size_t period = b.size();
  std::vector<double> out(n);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = forward(av[i], bv[i % period]);
  auto an = a.node();
  auto bn = b.node();
  return make_result(kind, a.shape(), std::move(out), {a, b},
                     [an, bn, n, period, partial_a, partial_b](ComputationRecord& self) {
                       if (an->requires_grad) {
                         an->ensure_grad();
                         for (std::size_t i = 0; i < n; ++i)
                           an->grad[i] += self.grad[i] * partial_a(an->data[i], bn->data[i % period]);
                       }
                       if (bn->requires_grad) {
                         bn->ensure_grad();
                         for (std::size_t i = 0; i < n; ++i)
                           bn->grad[i % period] +=
                               self.grad[i] * partial_b(an->data[i], bn->data[i % period]);
                       }
                     });
}

template <class Forward, class Derivative>
Tensor elementwise_unary(Primitive kind, const Tensor& a, Forward forward, Derivative derivative) {
  const std::size_t n = a.size();
  std::vector<double> out(n);
  auto av = a.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = forward(av[i]);
  auto an = a.node();
  return make_result(kind, a.shape(), out, {a}, [an, n, derivative](ComputationRecord& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      an->grad[i] += self.grad[i] * derivative(an->data[i], self.data[i]);
  });
}

struct AxisView {
  std::size_t outer;  // number of reduced groups
  std::size_t length;  // elements per group
  std::size_t stride;  // distance between consecutive elements in a group
  Shape result_shape;

  std::size_t index(std::size_t group, std::size_t k) const {
    if (stride == 1) return group * length + k;
    return k * stride + group;
  }
};

// Reductions over a rank-1 tensor produce shape [1]; over a rank-2 tensor
// axis 1 produces [rows] and axis 0 produces [cols].
inline AxisView axis_view(Primitive kind, const Tensor& a, int axis) {
  if (a.rank() == 1) {
    if (axis != 0 && axis != -1)
      throw ShapeError(std::string(primitive_name(kind)) + ": axis " + std::to_string(axis) +
                       " invalid for shape " + shape_string(a.shape()));
    return {1, a.size(), 1, {1}};
  }
  if (a.rank() == 2) {
    if (axis == 1 || axis == -1) return {a.rows(), a.cols(), 1, {a.rows()}};
    if (axis == 0) return {a.cols(), a.rows(), a.cols(), {a.cols()}};
  }
  throw ShapeError(std::string(primitive_name(kind)) + ": axis " + std::to_string(axis) +
                   " invalid for shape " + shape_string(a.shape()));
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::elementwise_binary(
      Primitive::add, a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::elementwise_binary(
      Primitive::sub, a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::elementwise_binary(
      Primitive::mul, a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

inline Tensor scalar_mul(const Tensor& a, double c) {
  return detail::elementwise_unary(
      Primitive::scalar_mul, a, [c](double x) { return c * x; },
      [c](double, double) { return c; });
}

inline Tensor scalar_add(const Tensor& a, double c) {
  return detail::elementwise_unary(
      Primitive::scalar_add, a, [c](double x) { return x + c; },
      [](double, double) { return 1.0; });
}

inline Tensor relu(const Tensor& a) {
  // Subgradient at 0 is 0.
  return detail::elementwise_unary(
      Primitive::relu, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor tanh(const Tensor& a) {
  return detail::elementwise_unary(
      Primitive::tanh, a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

inline Tensor exp(const Tensor& a) {
  return detail::elementwise_unary(
      Primitive::exp, a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

inline Tensor log(const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0.0)) {
      throw DomainError("log: operand must be strictly positive, got " + std::to_string(v));
    }
  }
  return detail::elementwise_unary(
      Primitive::log, a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

/// max(x, floor) elementwise; the gradient is zero where the floor is active.
inline Tensor clamp_min(const Tensor& a, double floor) {
  return detail::elementwise_unary(
      Primitive::clamp_min, a, [floor](double x) { return x < floor ? floor : x; },
      [floor](double x, double) { return x < floor ? 0.0 : 1.0; });
}

inline Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose: expected a matrix, got " + shape_string(a.shape()));
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.size());
  auto av = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  auto an = a.node();
  return detail::make_result(Primitive::transpose, {c, r}, std::move(out), {a},
                             [an, r, c](ComputationRecord& self) {
                               an->ensure_grad();
                               for (std::size_t i = 0; i < r; ++i)
                                 for (std::size_t j = 0; j < c; ++j)
                                   an->grad[i * c + j] += self.grad[j * r + i];
                             });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
    detail::shape_mismatch(Primitive::matmul, a.shape(), b.shape());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m, 0.0);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += av[i * k + p] * bv[p * m + j];
      out[i * m + j] = acc;
    }
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result(Primitive::matmul, {n, m}, std::move(out), {a, b},
                             [an, bn, n, k, m](ComputationRecord& self) {
                               const auto& g = self.grad;
                               if (an->requires_grad) {
                                 an->ensure_grad();
                                 for (std::size_t i = 0; i < n; ++i)
                                   for (std::size_t p = 0; p < k; ++p) {
                                     double acc = 0.0;
                                     for (std::size_t j = 0; j < m; ++j)
                                       acc += g[i * m + j] * bn->data[p * m + j];
                                     an->grad[i * k + p] += acc;
                                   }
                               }
                               if (bn->requires_grad) {
                                 bn->ensure_grad();
                                 for (std::size_t p = 0; p < k; ++p)
                                   for (std::size_t j = 0; j < m; ++j) {
                                     double acc = 0.0;
                                     for (std::size_t i = 0; i < n; ++i)
                                       acc += an->data[i * k + p] * g[i * m + j];
                                     bn->grad[p * m + j] += acc;
                                   }
                               }
                             });
}

/// Numerically stable log(sum(exp(x))) along an axis, shifted by the max.
inline Tensor log_sum_exp(const Tensor& a, int axis = -1) {
  auto view = detail::axis_view(Primitive::log_sum_exp, a, axis);
  std::vector<double> out(view.outer);
  auto av = a.data();
  for (std::size_t g = 0; g < view.outer; ++g) {
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < view.length; ++k) shift = std::max(shift, av[view.index(g, k)]);
    double acc = 0.0;
    for (std::size_t k = 0; k < view.length; ++k) acc += std::exp(av[view.index(g, k)] - shift);
    out[g] = shift + std::log(acc);
  }
  auto an = a.node();
  return detail::make_result(Primitive::log_sum_exp, view.result_shape, std::move(out), {a},
                             [an, view](ComputationRecord& self) {
                               an->ensure_grad();
                               for (std::size_t g = 0; g < view.outer; ++g)
                                 for (std::size_t k = 0; k < view.length; ++k) {
                                   auto idx = view.index(g, k);
                                   an->grad[idx] += self.grad[g] * std::exp(an->data[idx] - self.data[g]);
                                 }
                             });
}

/// Maximum along an axis; the gradient flows to the first maximal entry.
inline Tensor max(const Tensor& a, int axis = -1) {
  auto view = detail::axis_view(Primitive::max, a, axis);
  std::vector<double> out(view.outer);
  std::vector<std::size_t> arg(view.outer);
  auto av = a.data();
  for (std::size_t g = 0; g < view.outer; ++g) {
    std::size_t best = view.index(g, 0);
    for (std::size_t k = 1; k < view.length; ++k) {
      auto idx = view.index(g, k);
      if (av[idx] > av[best]) best = idx;
    }
    arg[g] = best;
    out[g] = av[best];
  }
  auto an = a.node();
  return detail::make_result(Primitive::max, view.result_shape, std::move(out), {a},
                             [an, arg = std::move(arg)](ComputationRecord& self) {
                               an->ensure_grad();
                               for (std::size_t g = 0; g < arg.size(); ++g) an->grad[arg[g]] += self.grad[g];
                             });
}

inline Tensor reduce_sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  auto an = a.node();
  return detail::make_result(Primitive::reduce_sum, {1}, {acc}, {a}, [an](ComputationRecord& self) {
    an->ensure_grad();
    for (auto& g : an->grad) g += self.grad[0];
  });
}

/// Sum along an axis (see axis_view for the result shape).
inline Tensor reduce_sum(const Tensor& a, int axis) {
  auto view = detail::axis_view(Primitive::reduce_sum, a, axis);
  std::vector<double> out(view.outer, 0.0);
  auto av = a.data();
  for (std::size_t g = 0; g < view.outer; ++g)
    for (std::size_t k = 0; k < view.length; ++k) out[g] += av[view.index(g, k)];
  auto an = a.node();
  return detail::make_result(Primitive::reduce_sum, view.result_shape, std::move(out), {a},
                             [an, view](ComputationRecord& self) {
                               an->ensure_grad();
                               for (std::size_t g = 0; g < view.outer; ++g)
                                 for (std::size_t k = 0; k < view.length; ++k)
                                   an->grad[view.index(g, k)] += self.grad[g];
                             });
}

inline Tensor reduce_mean(const Tensor& a) {
  const double n = static_cast<double>(a.size());
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  auto an = a.node();
  return detail::make_result(Primitive::reduce_mean, {1}, {acc / n}, {a},
                             [an, n](ComputationRecord& self) {
                               an->ensure_grad();
                               for (auto& g : an->grad) g += self.grad[0] / n;
                             });
}

/// Pairwise Euclidean distances between the rows of a (N x d) and b (M x d),
/// returned as an N x M matrix. The gradient at a zero distance is zero.
inline Tensor l2_norm_of_difference(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
    detail::shape_mismatch(Primitive::l2_norm_of_difference, a.shape(), b.shape());
  const std::size_t n = a.rows(), m = b.rows(), d = a.cols();
  std::vector<double> out(n * m);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        double diff = av[i * d + c] - bv[j * d + c];
        acc += diff * diff;
      }
      out[i * m + j] = std::sqrt(acc);
    }
  auto an = a.node();
  auto bn = b.node();
  return detail::make_result(
      Primitive::l2_norm_of_difference, {n, m}, std::move(out), {a, b},
      [an, bn, n, m, d](ComputationRecord& self) {
        if (an->requires_grad) an->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            double dist = self.data[i * m + j];
            if (dist == 0.0) continue;
            double scale = self.grad[i * m + j] / dist;
            for (std::size_t c = 0; c < d; ++c) {
              double diff = an->data[i * d + c] - bn->data[j * d + c];
              if (an->requires_grad) an->grad[i * d + c] += scale * diff;
              if (bn->requires_grad) bn->grad[j * d + c] -= scale * diff;
            }
          }
      });
}

/// Row-wise selection: out[r] = a[r, index[r]].
inline Tensor pick(const Tensor& a, std::span<const int> index) {
  if (a.rank() != 2 || index.size() != a.rows())
    throw ShapeError("pick: expected " + std::to_string(a.rank() == 2 ? a.rows() : 0) +
                     " indices for shape " + shape_string(a.shape()) + ", got " +
                     std::to_string(index.size()));
  const std::size_t n = a.rows(), k = a.cols();
  std::vector<std::size_t> flat(n);
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (index[r] < 0 || static_cast<std::size_t>(index[r]) >= k)
      throw std::out_of_range("pick: index " + std::to_string(index[r]) + " at row " +
                              std::to_string(r) + " outside [0, " + std::to_string(k) + ")");
    flat[r] = r * k + static_cast<std::size_t>(index[r]);
    out[r] = a.data()[flat[r]];
  }
  auto an = a.node();
  return detail::make_result(Primitive::pick, {n}, std::move(out), {a},
                             [an, flat = std::move(flat)](ComputationRecord& self) {
                               an->ensure_grad();
                               for (std::size_t r = 0; r < flat.size(); ++r) an->grad[flat[r]] += self.grad[r];
                             });
}

inline void Tensor::backward() const {
  if (size() != 1) {
    throw ShapeError("backward: root must be a single-element tensor, got " + shape_string(shape()));
  }
  if (!requires_grad()) return;

  std::vector<ComputationRecord*> order;
  std::unordered_set<const ComputationRecord*> seen;
  std::vector<ComputationRecord*> stack{node_.get()};
  while (!stack.empty()) {
    auto* current = stack.back();
    stack.pop_back();
    if (!seen.insert(current).second) continue;
    order.push_back(current);
    for (const auto& parent : current->parents)
      if (parent->requires_grad) stack.push_back(parent.get());
  }
  std::sort(order.begin(), order.end(),
            [](const ComputationRecord* x, const ComputationRecord* y) { return x->id > y->id; });

  // Interior grads are scratch space for this pass; leaf grads accumulate.
  for (auto* n : order)
    if (n->kind != Primitive::leaf) n->grad.assign(n->data.size(), 0.0);
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto* n : order)
    if (n->backward) n->backward(*n);
  for (auto* n : order)
    if (n->kind != Primitive::leaf) n->grad.clear();
}

/// Result of comparing analytic and central-difference gradients.
struct GradCheckReport {
  bool passed = true;
  double max_abs_discrepancy = 0.0;
  double max_rel_discrepancy = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares an analytic gradient against central differences of `value`
/// around `point`. A coordinate passes when its relative discrepancy is at
/// most rel_tol or its absolute discrepancy is at most 1e-8.
inline GradCheckReport compare_gradients(const std::function<double(std::span<const double>)>& value,
                                         std::span<const double> analytic,
                                         std::span<const double> point, double h, double rel_tol) {
  GradCheckReport report;
  std::vector<double> probe(point.begin(), point.end());
  double worst = -1.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = value(probe);
    probe[i] = saved - h;
    const double down = value(probe);
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double abs_err = std::abs(numeric - analytic[i]);
    const double scale = std::max(std::abs(numeric), std::abs(analytic[i]));
    const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
    const bool ok = std::isfinite(numeric) && (abs_err <= 1e-8 || rel_err <= rel_tol);
    if (!ok) report.passed = false;
    report.max_abs_discrepancy = std::max(report.max_abs_discrepancy, abs_err);
    // Near-zero coordinates are judged by the absolute fallback only.
    const double effective = abs_err <= 1e-8 ? 0.0 : rel_err;
    if (effective > worst) {
      worst = effective;
      report.worst_index = i;
    }
    report.max_rel_discrepancy = std::max(report.max_rel_discrepancy, effective);
    ++report.checked;
  }
  return report;
}

/// Checks d f / d point, where f maps a tensor to a scalar tensor.
inline GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
                                  double h = 1e-5, double rel_tol = 1e-4) {
  Tensor x(point.shape(), std::vector<double>(point.data().begin(), point.data().end()), true);
  f(x).backward();
  std::vector<double> analytic(x.grad().begin(), x.grad().end());
  auto value = [&](std::span<const double> values) {
    return f(Tensor(point.shape(), std::vector<double>(values.begin(), values.end()))).item();
  };
  return compare_gradients(value, analytic, point.data(), h, rel_tol);
}

/// Checks d f / d params for a scalar closure over a set of grad-tracking
/// parameter tensors. Parameters are perturbed in place and restored.
inline GradCheckReport grad_check_parameters(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                             double h = 1e-5, double rel_tol = 1e-4) {
  for (auto& p : params) p.zero_grad();
  f().backward();
  std::vector<double> analytic;
  std::vector<double> flat;
  for (const auto& p : params) {
    if (p.has_grad()) {
      analytic.insert(analytic.end(), p.grad().begin(), p.grad().end());
    } else {
      analytic.insert(analytic.end(), p.size(), 0.0);
    }
    flat.insert(flat.end(), p.data().begin(), p.data().end());
  }
  auto value = [&](std::span<const double> values) {
    std::size_t offset = 0;
    for (auto& p : params) {
      auto dst = p.mutable_data();
      std::copy(values.begin() + offset, values.begin() + offset + dst.size(), dst.begin());
      offset += dst.size();
    }
    return f().item();
  };
  auto report = compare_gradients(value, analytic, flat, h, rel_tol);
  value(flat);
  for (auto& p : params) p.zero_grad();
  return report;
}

}  // namespace frob
