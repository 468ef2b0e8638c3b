// Copyright 2026 the convoaffect authors. Apache 2.0 license.
//
// Seeded random draws on top of std::mt19937_64. The standard pins the
// engine's bit stream but not the distributions, so the uniform/normal
// transforms live here to keep seeded runs reproducible across stdlibs.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "convoaffect/common.hpp"

namespace convoaffect {

using Rng = std::mt19937_64;

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Standard normal via Box-Muller; draws two engine values per call.
inline double normal01(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps log finite
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

namespace detail {

// Entries ~ uniform(-bound, bound), drawn row-major.
template <class Scalar>
MatX<Scalar> uniform_matrix(Index rows, Index cols, double bound, Rng& rng) {
  MatX<Scalar> m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = static_cast<Scalar>(uniform(rng, -bound, bound));
    }
  }
  return m;
}

}  // namespace detail

}  // namespace convoaffect
