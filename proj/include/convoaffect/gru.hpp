// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// GRU cell on the autodiff tape. The gate convention is normative for the
// whole repo:
//
//   z = sigmoid(W_z x + U_z h_prev + b_z)
//   r = sigmoid(W_r x + U_r h_prev + b_r)
//   h_cand = tanh(W_h x + U_h (r . h_prev) + b_h)
//   h = (1 - z) . h_prev + z . h_cand
//
// With all parameters zero this gives h = 0.5 * h_prev.

#pragma once

#include <string>

#include "convoaffect/autodiff.hpp"
#include "convoaffect/rng.hpp"

namespace convoaffect {

template <class Scalar>
struct GruParams {
  MatX<Scalar> w_z, w_r, w_h;  // hidden x input
  MatX<Scalar> u_z, u_r, u_h;  // hidden x hidden
  MatX<Scalar> b_z, b_r, b_h;  // hidden x 1

  Index hidden_size() const { return w_z.rows(); }
  Index input_size() const { return w_z.cols(); }
};

// Enumerates the nine tensors in a fixed order; P may be GruParams or
// GruVars (the field names match). This order is the serialization and
// optimizer-state order.
template <class P, class Fn>
void visit_gru(P& p, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".w_z", p.w_z);
  fn(prefix + ".w_r", p.w_r);
  fn(prefix + ".w_h", p.w_h);
  fn(prefix + ".u_z", p.u_z);
  fn(prefix + ".u_r", p.u_r);
  fn(prefix + ".u_h", p.u_h);
  fn(prefix + ".b_z", p.b_z);
  fn(prefix + ".b_r", p.b_r);
  fn(prefix + ".b_h", p.b_h);
}

template <class Scalar>
GruParams<Scalar> zero_gru_params(Index hidden, Index input) {
  GruParams<Scalar> p;
  p.w_z = p.w_r = p.w_h = MatX<Scalar>::Zero(hidden, input);
  p.u_z = p.u_r = p.u_h = MatX<Scalar>::Zero(hidden, hidden);
  p.b_z = p.b_r = p.b_h = MatX<Scalar>::Zero(hidden, 1);
  return p;
}

// Weights ~ uniform(-k, k) with k = 1/sqrt(hidden); biases zero. Tensors
// are drawn in visit order so a given rng state yields one exact result.
template <class Scalar>
GruParams<Scalar> init_gru_params(Index hidden, Index input, Rng& rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
  GruParams<Scalar> p;
  p.w_z = detail::uniform_matrix<Scalar>(hidden, input, k, rng);
  p.w_r = detail::uniform_matrix<Scalar>(hidden, input, k, rng);
  p.w_h = detail::uniform_matrix<Scalar>(hidden, input, k, rng);
  p.u_z = detail::uniform_matrix<Scalar>(hidden, hidden, k, rng);
  p.u_r = detail::uniform_matrix<Scalar>(hidden, hidden, k, rng);
  p.u_h = detail::uniform_matrix<Scalar>(hidden, hidden, k, rng);
  p.b_z = p.b_r = p.b_h = MatX<Scalar>::Zero(hidden, 1);
  return p;
}

template <class Scalar>
struct GruVars {
  Var<Scalar> w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h;
};

template <class Scalar>
GruVars<Scalar> mount(Tape<Scalar>& tape, const GruParams<Scalar>& p,
                      bool requires_grad) {
  GruVars<Scalar> v;
  v.w_z = tape.leaf(p.w_z, requires_grad);
  v.w_r = tape.leaf(p.w_r, requires_grad);
  v.w_h = tape.leaf(p.w_h, requires_grad);
  v.u_z = tape.leaf(p.u_z, requires_grad);
  v.u_r = tape.leaf(p.u_r, requires_grad);
  v.u_h = tape.leaf(p.u_h, requires_grad);
  v.b_z = tape.leaf(p.b_z, requires_grad);
  v.b_r = tape.leaf(p.b_r, requires_grad);
  v.b_h = tape.leaf(p.b_h, requires_grad);
  return v;
}

template <class Scalar>
Var<Scalar> gru_cell(const GruVars<Scalar>& p, const Var<Scalar>& x,
                     const Var<Scalar>& h_prev) {
  auto z = sigmoid(p.w_z * x + p.u_z * h_prev + p.b_z);
  auto r = sigmoid(p.w_r * x + p.u_r * h_prev + p.b_r);
  auto h_cand = tanh(p.w_h * x + p.u_h * cwise_mul(r, h_prev) + p.b_h);
  return add(cwise_mul(affine(z, Scalar(-1), Scalar(1)), h_prev),
             cwise_mul(z, h_cand));
}

}  // namespace convoaffect
