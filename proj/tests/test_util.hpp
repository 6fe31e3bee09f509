// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>

#include "srnn/rng.hpp"
#include "srnn/tensor.hpp"

namespace srnn::testing {

inline Matrix random_matrix(std::size_t r, std::size_t c, SeededRng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.uniform(-scale, scale);
  return m;
}

inline Vector random_vector(std::size_t n, SeededRng& rng, double scale = 1.0) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

// Central difference of f with respect to *slot.
inline double central_difference(double* slot, double step, const std::function<double()>& f) {
  const double saved = *slot;
  *slot = saved + step;
  const double plus = f();
  *slot = saved - step;
  const double minus = f();
  *slot = saved;
  return (plus - minus) / (2.0 * step);
}

// Scalar relative error with the same floor of 1 used by relative_error.
inline double scalar_rel(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

}  // namespace srnn::testing
