// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Dense-matrix reverse-mode automatic differentiation on a tape.
//
// A Tape owns the computation nodes; a Var is a cheap handle into it.
// Creation order is the topological order, so backward() is a single
// reverse sweep that visits every node exactly once. Column vectors are
// n x 1 matrices; there is no implicit broadcasting, every shape must
// match exactly.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "convoaffect/common.hpp"

namespace convoaffect {

template <class Scalar>
class Tape;

template <class Scalar>
class Var {
 public:
  Var() = default;

  Tape<Scalar>& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const MatX<Scalar>& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const;

 private:
  friend class Tape<Scalar>;
  Var(Tape<Scalar>* tape, int id) : tape_(tape), id_(id) {}
  Tape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

template <class Scalar>
class Tape {
 public:
  using Matrix = MatX<Scalar>;
  // Called with (tape, output gradient, output value) during backward.
  using PullFn = std::function<void(Tape&, const Matrix&, const Matrix&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> leaf(Matrix value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, nullptr);
  }

  Var<Scalar> constant(Scalar v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return leaf(std::move(m), false);
  }

  Var<Scalar> zeros(Index rows, Index cols = 1) {
    return leaf(Matrix::Zero(rows, cols), false);
  }

  Var<Scalar> emit(Matrix value, std::span<const Var<Scalar>> parents,
                   PullFn pull) {
    bool needs_grad = false;
    for (const auto& p : parents) {
      check_owned(p);
      needs_grad =
          needs_grad || nodes_[static_cast<std::size_t>(p.id())].requires_grad;
    }
    // Constant subgraphs carry no pull function; backward skips them.
    return push(std::move(value), needs_grad,
                needs_grad ? std::move(pull) : nullptr);
  }

  Var<Scalar> emit(Matrix value, std::initializer_list<Var<Scalar>> parents,
                   PullFn pull) {
    return emit(std::move(value),
                std::span<const Var<Scalar>>(parents.begin(), parents.size()),
                std::move(pull));
  }

  void backward(const Var<Scalar>& loss) {
    check_owned(loss);
    if (consumed_) {
      throw TapeConsumed("backward() already ran on this tape");
    }
    const Matrix& lv = value_of(loss.id());
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw NotScalar("backward() needs a 1x1 loss, got " +
                      shape_str(lv.rows(), lv.cols()));
    }
    consumed_ = true;
    Node& seed = nodes_[static_cast<std::size_t>(loss.id())];
    ensure_grad(seed);
    seed.grad(0, 0) = Scalar(1);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      ++visits_[i];
      Node& n = nodes_[i];
      if (n.pull && n.grad.size() > 0) {
        n.pull(*this, n.grad, n.value);
      }
    }
  }

  bool consumed() const { return consumed_; }
  std::size_t node_count() const { return nodes_.size(); }

  // Per-node backward visit counts; test instrumentation.
  const std::vector<int>& backward_visits() const { return visits_; }

  const Matrix& value_of(int id) const {
    return nodes_[static_cast<std::size_t>(id)].value;
  }

  bool requires_grad_of(int id) const {
    return nodes_[static_cast<std::size_t>(id)].requires_grad;
  }

  // Gradient of a requires_grad var after backward(); zero if the var was
  // never reached by the sweep.
  Matrix grad(const Var<Scalar>& v) const {
    check_owned(v);
    if (!consumed_) {
      throw Error("gradients unavailable before backward()");
    }
    const Node& n = nodes_[static_cast<std::size_t>(v.id())];
    if (!n.requires_grad) {
      throw Error("grad() queried on a var that does not require gradients");
    }
    if (n.grad.size() == 0) {
      return Matrix::Zero(n.value.rows(), n.value.cols());
    }
    return n.grad;
  }

  // Accumulates into a parent's gradient buffer; no-op for constants.
  template <class Derived>
  void add_grad(const Var<Scalar>& v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[static_cast<std::size_t>(v.id())];
    if (!n.requires_grad) {
      return;
    }
    ensure_grad(n);
    n.grad += g;
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // lazily allocated on first accumulation
    PullFn pull;
    bool requires_grad = false;
  };

  void ensure_grad(Node& n) {
    if (n.grad.size() == 0) {
      n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    }
  }

  Var<Scalar> push(Matrix value, bool requires_grad, PullFn pull) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.pull = std::move(pull);
    nodes_.push_back(std::move(n));
    visits_.push_back(0);
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  void check_owned(const Var<Scalar>& v) const {
    if (v.tape_ != this || v.id_ < 0 ||
        static_cast<std::size_t>(v.id_) >= nodes_.size()) {
      throw Error("var does not belong to this tape");
    }
  }

  std::vector<Node> nodes_;
  std::vector<int> visits_;
  bool consumed_ = false;
};

template <class Scalar>
const MatX<Scalar>& Var<Scalar>::value() const {
  return tape_->value_of(id_);
}

template <class Scalar>
bool Var<Scalar>::requires_grad() const {
  return tape_->requires_grad_of(id_);
}

namespace detail {

template <class Scalar>
Tape<Scalar>& same_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (&a.tape() != &b.tape()) {
    throw Error("vars belong to different tapes");
  }
  return a.tape();
}

template <class Scalar>
void check_same_shape(const char* op, const Var<Scalar>& a,
                      const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.rows(), a.cols()) + " vs " +
                     shape_str(b.rows(), b.cols()));
  }
}

}  // namespace detail

// ---- primitives ----------------------------------------------------------

template <class Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& t = detail::same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dims differ, " +
                     shape_str(a.rows(), a.cols()) + " * " +
                     shape_str(b.rows(), b.cols()));
  }
  return t.emit(a.value() * b.value(), {a, b},
                [a, b](Tape<Scalar>& t, const MatX<Scalar>& g,
                       const MatX<Scalar>&) {
                  t.add_grad(a, g * t.value_of(b.id()).transpose());
                  t.add_grad(b, t.value_of(a.id()).transpose() * g);
                });
}

template <class Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& t = detail::same_tape(a, b);
  detail::check_same_shape("add", a, b);
  return t.emit(a.value() + b.value(), {a, b},
                [a, b](Tape<Scalar>& t, const MatX<Scalar>& g,
                       const MatX<Scalar>&) {
                  t.add_grad(a, g);
                  t.add_grad(b, g);
                });
}

template <class Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar c) {
  return a.tape().emit(c * a.value(), {a},
                       [a, c](Tape<Scalar>& t, const MatX<Scalar>& g,
                              const MatX<Scalar>&) { t.add_grad(a, c * g); });
}

// Elementwise alpha * a + beta; the workhorse for (1 - z) style terms.
template <class Scalar>
Var<Scalar> affine(const Var<Scalar>& a, Scalar alpha, Scalar beta) {
  return a.tape().emit(
      (alpha * a.value().array() + beta).matrix(), {a},
      [a, alpha](Tape<Scalar>& t, const MatX<Scalar>& g,
                 const MatX<Scalar>&) { t.add_grad(a, alpha * g); });
}

template <class Scalar>
Var<Scalar> cwise_mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& t = detail::same_tape(a, b);
  detail::check_same_shape("cwise_mul", a, b);
  return t.emit(a.value().cwiseProduct(b.value()), {a, b},
                [a, b](Tape<Scalar>& t, const MatX<Scalar>& g,
                       const MatX<Scalar>&) {
                  t.add_grad(a, g.cwiseProduct(t.value_of(b.id())));
                  t.add_grad(b, g.cwiseProduct(t.value_of(a.id())));
                });
}

template <class Scalar>
Var<Scalar> tanh(const Var<Scalar>& a) {
  return a.tape().emit(
      a.value().array().tanh().matrix(), {a},
      [a](Tape<Scalar>& t, const MatX<Scalar>& g, const MatX<Scalar>& y) {
        t.add_grad(a, (g.array() * (1 - y.array().square())).matrix());
      });
}

template <class Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& a) {
  return a.tape().emit(
      (1 / (1 + (-a.value().array()).exp())).matrix(), {a},
      [a](Tape<Scalar>& t, const MatX<Scalar>& g, const MatX<Scalar>& y) {
        t.add_grad(a, (g.array() * y.array() * (1 - y.array())).matrix());
      });
}

template <class Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  return a.tape().emit(
      a.value().cwiseMax(Scalar(0)), {a},
      [a](Tape<Scalar>& t, const MatX<Scalar>& g, const MatX<Scalar>& y) {
        t.add_grad(
            a, (g.array() * (y.array() > Scalar(0)).template cast<Scalar>())
                   .matrix());
      });
}

// Softmax over a column vector; strictly positive output summing to 1.
template <class Scalar>
Var<Scalar> softmax(const Var<Scalar>& a) {
  if (a.cols() != 1 || a.rows() < 1) {
    throw ShapeError("softmax: expected a column vector, got " +
                     shape_str(a.rows(), a.cols()));
  }
  const auto& v = a.value();
  Eigen::Array<Scalar, Eigen::Dynamic, 1> e =
      (v.array() - v.maxCoeff()).exp();
  MatX<Scalar> y = (e / e.sum()).matrix();
  return a.tape().emit(
      std::move(y), {a},
      [a](Tape<Scalar>& t, const MatX<Scalar>& g, const MatX<Scalar>& y) {
        const Scalar inner = (y.array() * g.array()).sum();
        t.add_grad(a, (y.array() * (g.array() - inner)).matrix());
      });
}

template <class Scalar>
Var<Scalar> dot(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& t = detail::same_tape(a, b);
  if (a.cols() != 1 || b.cols() != 1 || a.rows() != b.rows()) {
    throw ShapeError("dot: need equal-length column vectors, got " +
                     shape_str(a.rows(), a.cols()) + " and " +
                     shape_str(b.rows(), b.cols()));
  }
  MatX<Scalar> out(1, 1);
  out(0, 0) = a.value().col(0).dot(b.value().col(0));
  return t.emit(std::move(out), {a, b},
                [a, b](Tape<Scalar>& t, const MatX<Scalar>& g,
                       const MatX<Scalar>&) {
                  t.add_grad(a, g(0, 0) * t.value_of(b.id()));
                  t.add_grad(b, g(0, 0) * t.value_of(a.id()));
                });
}

template <class Scalar>
Var<Scalar> concat_rows(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) {
    throw ShapeError("concat_rows: no inputs");
  }
  auto& t = parts.front().tape();
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const auto& p : parts) {
    detail::same_tape(parts.front(), p);
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: column mismatch " +
                       shape_str(p.rows(), p.cols()) + " vs " +
                       shape_str(parts.front().rows(), cols));
    }
    rows += p.rows();
  }
  MatX<Scalar> out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var<Scalar>> owned(parts.begin(), parts.end());
  return t.emit(std::move(out), parts,
                [owned](Tape<Scalar>& t, const MatX<Scalar>& g,
                        const MatX<Scalar>&) {
                  Index at = 0;
                  for (const auto& p : owned) {
                    const Index r = t.value_of(p.id()).rows();
                    t.add_grad(p, g.middleRows(at, r));
                    at += r;
                  }
                });
}

template <class Scalar>
Var<Scalar> concat_rows(std::initializer_list<Var<Scalar>> parts) {
  return concat_rows(std::span<const Var<Scalar>>(parts.begin(), parts.size()));
}

template <class Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) {
    throw ShapeError("concat_cols: no inputs");
  }
  auto& t = parts.front().tape();
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    detail::same_tape(parts.front(), p);
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " +
                       shape_str(p.rows(), p.cols()) + " vs " +
                       shape_str(rows, parts.front().cols()));
    }
    cols += p.cols();
  }
  MatX<Scalar> out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var<Scalar>> owned(parts.begin(), parts.end());
  return t.emit(std::move(out), parts,
                [owned](Tape<Scalar>& t, const MatX<Scalar>& g,
                        const MatX<Scalar>&) {
                  Index at = 0;
                  for (const auto& p : owned) {
                    const Index c = t.value_of(p.id()).cols();
                    t.add_grad(p, g.middleCols(at, c));
                    at += c;
                  }
                });
}

template <class Scalar>
Var<Scalar> concat_cols(std::initializer_list<Var<Scalar>> parts) {
  return concat_cols(std::span<const Var<Scalar>>(parts.begin(), parts.size()));
}

// Per-row mean over columns; gradient spreads 1/L to every column.
template <class Scalar>
Var<Scalar> rowwise_mean(const Var<Scalar>& a) {
  const Index n = a.cols();
  if (n < 1) {
    throw ShapeError("rowwise_mean: empty input");
  }
  return a.tape().emit(
      a.value().rowwise().mean(), {a},
      [a, n](Tape<Scalar>& t, const MatX<Scalar>& g, const MatX<Scalar>&) {
        t.add_grad(a, (g / Scalar(n)).replicate(1, n));
      });
}

namespace detail {

// Shared by rowwise_max / rowwise_min: reduce with an explicit scan so the
// gradient routes to the first achieving column on ties.
template <class Scalar, class Better>
Var<Scalar> rowwise_extreme(const Var<Scalar>& a, Better better,
                            const char* name) {
  const Index rows = a.rows();
  const Index cols = a.cols();
  if (cols < 1) {
    throw ShapeError(std::string(name) + ": empty input");
  }
  const auto& v = a.value();
  MatX<Scalar> out(rows, 1);
  auto arg = std::make_shared<std::vector<Index>>(
      static_cast<std::size_t>(rows), Index(0));
  for (Index r = 0; r < rows; ++r) {
    Index best = 0;
    for (Index c = 1; c < cols; ++c) {
      if (better(v(r, c), v(r, best))) {
        best = c;
      }
    }
    (*arg)[static_cast<std::size_t>(r)] = best;
    out(r, 0) = v(r, best);
  }
  return a.tape().emit(
      std::move(out), {a},
      [a, arg](Tape<Scalar>& t, const MatX<Scalar>& g, const MatX<Scalar>&) {
        MatX<Scalar> d = MatX<Scalar>::Zero(t.value_of(a.id()).rows(),
                                            t.value_of(a.id()).cols());
        for (Index r = 0; r < d.rows(); ++r) {
          d(r, (*arg)[static_cast<std::size_t>(r)]) += g(r, 0);
        }
        t.add_grad(a, d);
      });
}

}  // namespace detail

template <class Scalar>
Var<Scalar> rowwise_max(const Var<Scalar>& a) {
  return detail::rowwise_extreme(
      a, [](Scalar x, Scalar best) { return x > best; }, "rowwise_max");
}

template <class Scalar>
Var<Scalar> rowwise_min(const Var<Scalar>& a) {
  return detail::rowwise_extreme(
      a, [](Scalar x, Scalar best) { return x < best; }, "rowwise_min");
}

// Sum of squared entries as a 1x1 tensor.
template <class Scalar>
Var<Scalar> sum_squares(const Var<Scalar>& a) {
  MatX<Scalar> out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return a.tape().emit(std::move(out), {a},
                       [a](Tape<Scalar>& t, const MatX<Scalar>& g,
                           const MatX<Scalar>&) {
                         t.add_grad(a, Scalar(2) * g(0, 0) * t.value_of(a.id()));
                       });
}

// -log softmax(logits)[target] computed via logsumexp; the backward rule is
// softmax(logits) - onehot(target).
template <class Scalar>
Var<Scalar> cross_entropy_with_logits(const Var<Scalar>& logits, Index target) {
  if (logits.cols() != 1) {
    throw ShapeError("cross_entropy_with_logits: expected a column vector, got " +
                     shape_str(logits.rows(), logits.cols()));
  }
  if (target < 0 || target >= logits.rows()) {
    throw DataError("class id " + std::to_string(target) +
                    " out of range [0, " + std::to_string(logits.rows()) + ")");
  }
  const auto& v = logits.value();
  const Scalar m = v.maxCoeff();
  const Scalar lse = m + std::log((v.array() - m).exp().sum());
  MatX<Scalar> out(1, 1);
  out(0, 0) = lse - v(target, 0);
  return logits.tape().emit(
      std::move(out), {logits},
      [logits, target](Tape<Scalar>& t, const MatX<Scalar>& g,
                       const MatX<Scalar>&) {
        const auto& v = t.value_of(logits.id());
        Eigen::Array<Scalar, Eigen::Dynamic, 1> p =
            (v.array() - v.maxCoeff()).exp();
        p /= p.sum();
        p(target) -= Scalar(1);
        t.add_grad(logits, (g(0, 0) * p).matrix());
      });
}

// weight * sum over params of sum of squares; a 1x1 tensor on the tape.
template <class Scalar>
Var<Scalar> l2_penalty(std::span<const Var<Scalar>> params, Scalar weight) {
  if (weight < Scalar(0)) {
    throw ConfigError("l2 weight must be nonnegative");
  }
  if (params.empty()) {
    throw ShapeError("l2_penalty: no parameters given");
  }
  Var<Scalar> acc = sum_squares(params.front());
  for (std::size_t i = 1; i < params.size(); ++i) {
    acc = add(acc, sum_squares(params[i]));
  }
  return scale(acc, weight);
}

template <class Scalar>
Var<Scalar> l2_penalty(std::initializer_list<Var<Scalar>> params,
                       Scalar weight) {
  return l2_penalty(std::span<const Var<Scalar>>(params.begin(), params.size()),
                    weight);
}

// ---- operator sugar (Eigen semantics: * is the matrix product) -----------

template <class Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) {
  return add(a, b);
}

template <class Scalar>
Var<Scalar> operator*(const Var<Scalar>& a, const Var<Scalar>& b) {
  return matmul(a, b);
}

template <class Scalar>
Var<Scalar> operator*(Scalar c, const Var<Scalar>& a) {
  return scale(a, c);
}

template <class Scalar>
Var<Scalar> operator*(const Var<Scalar>& a, Scalar c) {
  return scale(a, c);
}

}  // namespace convoaffect
