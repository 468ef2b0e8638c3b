// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Bias-corrected Adam over a flat list of parameter matrices, plus optional
// global-norm gradient clipping (off by default).

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "convoaffect/common.hpp"

namespace convoaffect {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class Scalar>
struct AdamState {
  AdamConfig hyper;
  long step = 0;
  std::vector<MatX<Scalar>> m;  // first moments, parameter-shaped
  std::vector<MatX<Scalar>> v;  // second moments
};

template <class Scalar>
AdamState<Scalar> make_adam_state(const std::vector<MatX<Scalar>*>& params,
                                  const AdamConfig& hyper) {
  AdamState<Scalar> st;
  st.hyper = hyper;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const auto* p : params) {
    st.m.push_back(MatX<Scalar>::Zero(p->rows(), p->cols()));
    st.v.push_back(MatX<Scalar>::Zero(p->rows(), p->cols()));
  }
  return st;
}

// One update over all parameters. Throws NumericalError on a non-finite
// gradient and ShapeError when a gradient does not match its parameter.
template <class Scalar>
void adam_step(const std::vector<MatX<Scalar>*>& params,
               const std::vector<MatX<Scalar>>& grads,
               AdamState<Scalar>& st) {
  if (params.size() != grads.size() || params.size() != st.m.size()) {
    throw ShapeError("adam_step: got " + std::to_string(grads.size()) +
                     " gradients for " + std::to_string(params.size()) +
                     " parameters (state holds " + std::to_string(st.m.size()) +
                     ")");
  }
  ++st.step;
  const Scalar b1 = static_cast<Scalar>(st.hyper.beta1);
  const Scalar b2 = static_cast<Scalar>(st.hyper.beta2);
  const Scalar lr = static_cast<Scalar>(st.hyper.lr);
  const Scalar eps = static_cast<Scalar>(st.hyper.epsilon);
  const Scalar c1 =
      Scalar(1) - static_cast<Scalar>(std::pow(st.hyper.beta1, st.step));
  const Scalar c2 =
      Scalar(1) - static_cast<Scalar>(std::pow(st.hyper.beta2, st.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    MatX<Scalar>& p = *params[i];
    const MatX<Scalar>& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      throw ShapeError("adam_step: gradient " + shape_str(g.rows(), g.cols()) +
                       " vs parameter " + shape_str(p.rows(), p.cols()) +
                       " at index " + std::to_string(i));
    }
    if (!g.allFinite()) {
      throw NumericalError("non-finite gradient at parameter index " +
                           std::to_string(i) + " on step " +
                           std::to_string(st.step));
    }
    st.m[i] = b1 * st.m[i] + (Scalar(1) - b1) * g;
    st.v[i] = b2 * st.v[i] + (Scalar(1) - b2) * g.cwiseProduct(g);
    p.array() -= lr * (st.m[i].array() / c1) /
                 ((st.v[i].array() / c2).sqrt() + eps);
  }
}

// Scales gradients so their global L2 norm is at most max_norm; a
// nonpositive max_norm disables clipping. Returns the pre-clip norm.
template <class Scalar>
double clip_gradients(std::vector<MatX<Scalar>>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) {
    sq += static_cast<double>(g.squaredNorm());
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const Scalar factor = static_cast<Scalar>(max_norm / norm);
    for (auto& g : grads) {
      g *= factor;
    }
  }
  return norm;
}

}  // namespace convoaffect
