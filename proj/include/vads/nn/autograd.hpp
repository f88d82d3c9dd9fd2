#pragma once

// Reverse-mode differentiation over dense matrices.
//
// Every backward rule is written in terms of the same differentiable ops, so
// gradients computed with create_graph = true are themselves differentiable.
// The WGAN gradient penalty relies on that (gradient of a gradient norm).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vads/core/errors.hpp"
#include "vads/core/matrix.hpp"

namespace vads::nn {

using Index = Eigen::Index;

inline thread_local bool grad_mode_enabled = true;

/// Disables graph recording in its scope.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(grad_mode_enabled) { grad_mode_enabled = false; }
  ~NoGradGuard() { grad_mode_enabled = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled) : previous_(grad_mode_enabled) { grad_mode_enabled = enabled; }
  ~GradModeGuard() { grad_mode_enabled = previous_; }
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

/// Records, for every element of every piecewise-linear op evaluated in its
/// scope, which linear piece the input fell on. Two evaluations with equal
/// patterns lie in one smooth region of the loss.
class KinkTrace {
 public:
  KinkTrace() : previous_(active_) { active_ = &pattern_; }
  ~KinkTrace() { active_ = previous_; }
  KinkTrace(const KinkTrace&) = delete;
  KinkTrace& operator=(const KinkTrace&) = delete;

  const std::vector<unsigned char>& pattern() const { return pattern_; }

  static std::vector<unsigned char>* active() { return active_; }

 private:
  std::vector<unsigned char> pattern_;
  std::vector<unsigned char>* previous_;
  static inline thread_local std::vector<unsigned char>* active_ = nullptr;
};

template <typename T>
class Var;

template <typename T>
struct Node {
  using Backward = std::function<std::vector<Var<T>>(const std::vector<Var<T>>& inputs, const Var<T>& grad)>;

  Matrix<T> value;
  bool requires_grad = false;
  std::vector<Var<T>> inputs;
  Backward backward;
  const char* op = "leaf";
};

/// Shared handle to a graph node. Copies alias the same node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Matrix<T> value, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Matrix<T>& value() const { return node_->value; }
  /// Only meaningful for leaves (parameters); graphs built earlier keep
  /// referring to the node, so mutate between steps only.
  Matrix<T>& mutable_value() { return node_->value; }
  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool is_leaf() const { return !node_->backward; }
  const char* op() const { return node_->op; }

  T item() const {
    if (rows() != 1 || cols() != 1) throw ValidationError("item() on a non-scalar");
    return node_->value(0, 0);
  }

  Var detach() const { return Var(node_->value, false); }
  Node<T>* node() const { return node_.get(); }

  template <typename U>
  friend Var<U> make_op(Matrix<U> value, std::vector<Var<U>> inputs, typename Node<U>::Backward backward,
                        const char* name);

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
Var<T> constant(Matrix<T> value) {
  return Var<T>(std::move(value), false);
}

template <typename T>
Var<T> parameter(Matrix<T> value) {
  return Var<T>(std::move(value), true);
}

template <typename T>
Var<T> make_op(Matrix<T> value, std::vector<Var<T>> inputs, typename Node<T>::Backward backward, const char* name) {
  Var<T> out(std::move(value), false);
  out.node_->op = name;
  if (!grad_mode_enabled) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Var<T>& v) { return v.requires_grad(); });
  if (!any) return out;
  out.node_->requires_grad = true;
  out.node_->inputs = std::move(inputs);
  out.node_->backward = std::move(backward);
  return out;
}

namespace detail {

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Ops. Declarations first: backward rules refer to each other.

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> div(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> neg(const Var<T>& a);
template <typename T> Var<T> scale(const Var<T>& a, T c);
template <typename T> Var<T> add_scalar(const Var<T>& a, T c);
template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> transpose(const Var<T>& a);
template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> broadcast_scalar(const Var<T>& s, Index rows, Index cols);
template <typename T> Var<T> sum_rows(const Var<T>& a);
template <typename T> Var<T> broadcast_rows(const Var<T>& v, Index rows);
template <typename T> Var<T> sum_cols(const Var<T>& a);
template <typename T> Var<T> broadcast_cols(const Var<T>& v, Index cols);
template <typename T> Var<T> exp(const Var<T>& a);
template <typename T> Var<T> log(const Var<T>& a);
template <typename T> Var<T> sqrt(const Var<T>& a);
template <typename T> Var<T> hconcat(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> slice_cols(const Var<T>& a, Index start, Index count);
template <typename T> Var<T> pad_cols(const Var<T>& a, Index start, Index total);
template <typename T> Var<T> gather_rows(const Var<T>& a, std::vector<Index> rows);
template <typename T> Var<T> scatter_add_rows(const Var<T>& a, std::vector<Index> rows, Index total);
template <typename T> Var<T> logsumexp_rows(const Var<T>& a);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "add");
  return make_op<T>(a.value() + b.value(), {a, b},
                    [](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{g, g}; }, "add");
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "sub");
  return make_op<T>(a.value() - b.value(), {a, b},
                    [](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{g, neg(g)}; },
                    "sub");
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "mul");
  return make_op<T>(
      a.value().cwiseProduct(b.value()), {a, b},
      [](const std::vector<Var<T>>& in, const Var<T>& g) {
        std::vector<Var<T>> out(2);
        if (in[0].requires_grad()) out[0] = mul(g, in[1]);
        if (in[1].requires_grad()) out[1] = mul(g, in[0]);
        return out;
      },
      "mul");
}

template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "div");
  return make_op<T>(
      a.value().cwiseQuotient(b.value()), {a, b},
      [](const std::vector<Var<T>>& in, const Var<T>& g) {
        std::vector<Var<T>> out(2);
        if (in[0].requires_grad()) out[0] = div(g, in[1]);
        if (in[1].requires_grad()) out[1] = neg(div(mul(g, in[0]), mul(in[1], in[1])));
        return out;
      },
      "div");
}

template <typename T>
Var<T> neg(const Var<T>& a) {
  return make_op<T>(-a.value(), {a},
                    [](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{neg(g)}; }, "neg");
}

template <typename T>
Var<T> scale(const Var<T>& a, T c) {
  return make_op<T>(
      a.value() * c, {a},
      [c](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{scale(g, c)}; }, "scale");
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T c) {
  return make_op<T>(Matrix<T>((a.value().array() + c).matrix()), {a},
                    [](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{g}; },
                    "add_scalar");
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  if (a.cols() != b.rows()) {
    throw ValidationError("matmul: inner dimensions differ (" + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
  Matrix<T> v;
  v.noalias() = a.value() * b.value();
  return make_op<T>(
      std::move(v), {a, b},
      [](const std::vector<Var<T>>& in, const Var<T>& g) {
        std::vector<Var<T>> out(2);
        if (in[0].requires_grad()) out[0] = matmul(g, transpose(in[1]));
        if (in[1].requires_grad()) out[1] = matmul(transpose(in[0]), g);
        return out;
      },
      "matmul");
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  return make_op<T>(Matrix<T>(a.value().transpose()), {a},
                    [](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{transpose(g)}; },
                    "transpose");
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  Matrix<T> v(1, 1);
  v(0, 0) = a.value().sum();
  const Index r = a.rows();
  const Index c = a.cols();
  return make_op<T>(
      std::move(v), {a},
      [r, c](const std::vector<Var<T>>&, const Var<T>& g) {
        return std::vector<Var<T>>{broadcast_scalar(g, r, c)};
      },
      "sum");
}

template <typename T>
Var<T> broadcast_scalar(const Var<T>& s, Index rows, Index cols) {
  if (s.rows() != 1 || s.cols() != 1) throw ValidationError("broadcast_scalar: input must be 1x1");
  return make_op<T>(Matrix<T>::Constant(rows, cols, s.value()(0, 0)), {s},
                    [](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{sum(g)}; },
                    "broadcast_scalar");
}

template <typename T>
Var<T> sum_rows(const Var<T>& a) {
  const Index r = a.rows();
  return make_op<T>(
      Matrix<T>(a.value().colwise().sum()), {a},
      [r](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{broadcast_rows(g, r)}; },
      "sum_rows");
}

template <typename T>
Var<T> broadcast_rows(const Var<T>& v, Index rows) {
  if (v.rows() != 1) throw ValidationError("broadcast_rows: input must be a row vector");
  return make_op<T>(Matrix<T>(v.value().replicate(rows, 1)), {v},
                    [](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{sum_rows(g)}; },
                    "broadcast_rows");
}

template <typename T>
Var<T> sum_cols(const Var<T>& a) {
  const Index c = a.cols();
  return make_op<T>(
      Matrix<T>(a.value().rowwise().sum()), {a},
      [c](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{broadcast_cols(g, c)}; },
      "sum_cols");
}

template <typename T>
Var<T> broadcast_cols(const Var<T>& v, Index cols) {
  if (v.cols() != 1) throw ValidationError("broadcast_cols: input must be a column vector");
  return make_op<T>(Matrix<T>(v.value().replicate(1, cols)), {v},
                    [](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{sum_cols(g)}; },
                    "broadcast_cols");
}

template <typename T>
Var<T> exp(const Var<T>& a) {
  return make_op<T>(
      Matrix<T>(a.value().array().exp()), {a},
      [](const std::vector<Var<T>>& in, const Var<T>& g) { return std::vector<Var<T>>{mul(g, exp(in[0]))}; },
      "exp");
}

template <typename T>
Var<T> log(const Var<T>& a) {
  return make_op<T>(
      Matrix<T>(a.value().array().log()), {a},
      [](const std::vector<Var<T>>& in, const Var<T>& g) { return std::vector<Var<T>>{div(g, in[0])}; }, "log");
}

template <typename T>
Var<T> sqrt(const Var<T>& a) {
  return make_op<T>(
      Matrix<T>(a.value().array().sqrt()), {a},
      [](const std::vector<Var<T>>& in, const Var<T>& g) {
        return std::vector<Var<T>>{div(g, scale(sqrt(in[0]), T(2)))};
      },
      "sqrt");
}

namespace detail {

template <typename T>
void trace_pieces(const Matrix<T>& pieces) {
  auto* trace = KinkTrace::active();
  if (trace == nullptr) return;
  for (Index i = 0; i < pieces.size(); ++i) trace->push_back(static_cast<unsigned char>(pieces.data()[i]));
}

}  // namespace detail

/// Elementwise product with a constant mask (piecewise-linear derivatives).
template <typename T>
Var<T> mask_mul(const Var<T>& a, Matrix<T> mask, const char* name) {
  if (KinkTrace::active() != nullptr) {
    detail::trace_pieces<T>(a.value().unaryExpr([](T x) { return x > T(0) ? T(1) : (x < T(0) ? T(2) : T(0)); }));
  }
  Matrix<T> v = a.value().cwiseProduct(mask);
  auto m = std::make_shared<const Matrix<T>>(std::move(mask));
  return make_op<T>(
      std::move(v), {a},
      [m](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{mul(g, constant(*m))}; },
      name);
}

template <typename T>
Var<T> abs(const Var<T>& a) {
  Matrix<T> sign = a.value().unaryExpr([](T x) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
  return mask_mul(a, std::move(sign), "abs");
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope = T(0.2)) {
  Matrix<T> m = a.value().unaryExpr([slope](T x) { return x > T(0) ? T(1) : slope; });
  return mask_mul(a, std::move(m), "leaky_relu");
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  Matrix<T> m = a.value().unaryExpr([](T x) { return x > T(0) ? T(1) : T(0); });
  return mask_mul(a, std::move(m), "relu");
}

/// Clamps to [lo, hi]; zero gradient outside.
template <typename T>
Var<T> clamp(const Var<T>& a, T lo, T hi) {
  Matrix<T> v = a.value().cwiseMax(lo).cwiseMin(hi);
  Matrix<T> m = a.value().unaryExpr([lo, hi](T x) { return (x >= lo && x <= hi) ? T(1) : T(0); });
  if (KinkTrace::active() != nullptr) {
    detail::trace_pieces<T>(a.value().unaryExpr([lo, hi](T x) { return x < lo ? T(0) : (x > hi ? T(2) : T(1)); }));
  }
  auto mask = std::make_shared<const Matrix<T>>(std::move(m));
  return make_op<T>(
      std::move(v), {a},
      [mask](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{mul(g, constant(*mask))}; },
      "clamp");
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  Matrix<T> v = a.value().unaryExpr([](T x) { return T(1) / (T(1) + std::exp(-x)); });
  return make_op<T>(
      std::move(v), {a},
      [](const std::vector<Var<T>>& in, const Var<T>& g) {
        Var<T> s = sigmoid(in[0]);
        return std::vector<Var<T>>{mul(g, mul(s, add_scalar(neg(s), T(1))))};
      },
      "sigmoid");
}

template <typename T>
Var<T> hconcat(const Var<T>& a, const Var<T>& b) {
  if (a.rows() != b.rows()) throw ValidationError("hconcat: row counts differ");
  Matrix<T> v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  const Index ca = a.cols();
  const Index cb = b.cols();
  return make_op<T>(
      std::move(v), {a, b},
      [ca, cb](const std::vector<Var<T>>& in, const Var<T>& g) {
        std::vector<Var<T>> out(2);
        if (in[0].requires_grad()) out[0] = slice_cols(g, 0, ca);
        if (in[1].requires_grad()) out[1] = slice_cols(g, ca, cb);
        return out;
      },
      "hconcat");
}

template <typename T>
Var<T> slice_cols(const Var<T>& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ValidationError("slice_cols: out of range");
  const Index total = a.cols();
  return make_op<T>(
      Matrix<T>(a.value().middleCols(start, count)), {a},
      [start, total](const std::vector<Var<T>>&, const Var<T>& g) {
        return std::vector<Var<T>>{pad_cols(g, start, total)};
      },
      "slice_cols");
}

template <typename T>
Var<T> pad_cols(const Var<T>& a, Index start, Index total) {
  if (start < 0 || start + a.cols() > total) throw ValidationError("pad_cols: out of range");
  Matrix<T> v = Matrix<T>::Zero(a.rows(), total);
  v.middleCols(start, a.cols()) = a.value();
  const Index count = a.cols();
  return make_op<T>(
      std::move(v), {a},
      [start, count](const std::vector<Var<T>>&, const Var<T>& g) {
        return std::vector<Var<T>>{slice_cols(g, start, count)};
      },
      "pad_cols");
}

template <typename T>
Var<T> gather_rows(const Var<T>& a, std::vector<Index> rows) {
  Matrix<T> v(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) throw ValidationError("gather_rows: index out of range");
    v.row(static_cast<Index>(i)) = a.value().row(rows[i]);
  }
  const Index total = a.rows();
  auto idx = std::make_shared<const std::vector<Index>>(std::move(rows));
  return make_op<T>(
      std::move(v), {a},
      [idx, total](const std::vector<Var<T>>&, const Var<T>& g) {
        return std::vector<Var<T>>{scatter_add_rows(g, *idx, total)};
      },
      "gather_rows");
}

template <typename T>
Var<T> scatter_add_rows(const Var<T>& a, std::vector<Index> rows, Index total) {
  if (static_cast<Index>(rows.size()) != a.rows()) throw ValidationError("scatter_add_rows: index count mismatch");
  Matrix<T> v = Matrix<T>::Zero(total, a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) v.row(rows[i]) += a.value().row(static_cast<Index>(i));
  auto idx = std::make_shared<const std::vector<Index>>(std::move(rows));
  return make_op<T>(
      std::move(v), {a},
      [idx](const std::vector<Var<T>>&, const Var<T>& g) { return std::vector<Var<T>>{gather_rows(g, *idx)}; },
      "scatter_add_rows");
}

/// log sum_j exp(a_ij), one value per row (n x 1).
template <typename T>
Var<T> logsumexp_rows(const Var<T>& a) {
  Matrix<T> v(a.rows(), 1);
  for (Index r = 0; r < a.rows(); ++r) {
    const T m = a.value().row(r).maxCoeff();
    v(r, 0) = m + std::log((a.value().row(r).array() - m).exp().sum());
  }
  return make_op<T>(
      std::move(v), {a},
      [](const std::vector<Var<T>>& in, const Var<T>& g) {
        const Var<T>& x = in[0];
        Var<T> softmax = exp(sub(x, broadcast_cols(logsumexp_rows(x), x.cols())));
        return std::vector<Var<T>>{mul(broadcast_cols(g, x.cols()), softmax)};
      },
      "logsumexp_rows");
}

// ---------------------------------------------------------------------------
// Composites.

template <typename T>
Var<T> mean(const Var<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.rows() * a.cols()));
}

template <typename T>
Var<T> square(const Var<T>& a) {
  return mul(a, a);
}

template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& bias) {
  return add(x, broadcast_rows(bias, x.rows()));
}

template <typename T>
Var<T> log_softmax_rows(const Var<T>& a) {
  return sub(a, broadcast_cols(logsumexp_rows(a), a.cols()));
}

/// Rows scaled to unit l2 norm; eps guards the zero row.
template <typename T>
Var<T> normalize_rows(const Var<T>& a, T eps = T(1e-12)) {
  Var<T> norms = sqrt(add_scalar(sum_cols(square(a)), eps));
  return div(a, broadcast_cols(norms, a.cols()));
}

/// a[i, cols[i]] as an n x 1 column.
template <typename T>
Var<T> pick_cols(const Var<T>& a, std::span<const Index> cols) {
  if (static_cast<Index>(cols.size()) != a.rows()) throw ValidationError("pick_cols: index count mismatch");
  Matrix<T> onehot = Matrix<T>::Zero(a.rows(), a.cols());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] < 0 || cols[i] >= a.cols()) throw ValidationError("pick_cols: index out of range");
    onehot(static_cast<Index>(i), cols[i]) = T(1);
  }
  return sum_cols(mul(a, constant(std::move(onehot))));
}

/// Mean softmax cross-entropy of row logits against class columns.
template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const Index> targets) {
  return mean(sub(logsumexp_rows(logits), pick_cols(logits, targets)));
}

template <typename T>
Var<T> operator+(const Var<T>& a, const Var<T>& b) {
  return add(a, b);
}
template <typename T>
Var<T> operator-(const Var<T>& a, const Var<T>& b) {
  return sub(a, b);
}
template <typename T>
Var<T> operator-(const Var<T>& a) {
  return neg(a);
}
template <typename T>
Var<T> operator*(T c, const Var<T>& a) {
  return scale(a, c);
}

// ---------------------------------------------------------------------------

/// Gradients of a scalar `output` with respect to `wrt`.
///
/// Entries of `wrt` the output does not depend on get zero matrices. With
/// create_graph the returned Vars carry history and can be differentiated
/// again.
template <typename T>
std::vector<Var<T>> grad(const Var<T>& output, const std::vector<Var<T>>& wrt, bool create_graph = false) {
  if (output.rows() != 1 || output.cols() != 1) throw ValidationError("grad: output must be a scalar");

  std::vector<Var<T>> result(wrt.size());
  auto zeros_for = [](const Var<T>& v) { return constant<T>(Matrix<T>::Zero(v.rows(), v.cols())); };
  if (!output.requires_grad()) {
    for (std::size_t i = 0; i < wrt.size(); ++i) result[i] = zeros_for(wrt[i]);
    return result;
  }

  // Post-order DFS; reversed it is a topological order from the output.
  std::vector<Node<T>*> order;
  std::unordered_map<Node<T>*, bool> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(output.node(), 0);
  visited[output.node()] = true;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].node();
      if (child->requires_grad && !visited[child]) {
        visited[child] = true;
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  GradModeGuard mode(create_graph);
  std::unordered_map<Node<T>*, Var<T>> grads;
  grads[output.node()] = constant<T>(Matrix<T>::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    auto found = grads.find(node);
    if (found == grads.end() || !node->backward) continue;
    const Var<T> g = found->second;
    std::vector<Var<T>> parts = node->backward(node->inputs, g);
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      const Var<T>& input = node->inputs[i];
      if (!input.requires_grad() || !parts[i].defined()) continue;
      auto [slot, inserted] = grads.try_emplace(input.node(), parts[i]);
      if (!inserted) slot->second = add(slot->second, parts[i]);
    }
  }

  for (std::size_t i = 0; i < wrt.size(); ++i) {
    auto found = grads.find(wrt[i].node());
    result[i] = found == grads.end() ? zeros_for(wrt[i]) : found->second;
  }
  return result;
}

}  // namespace vads::nn
