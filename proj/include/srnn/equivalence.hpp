// SPDX-License-Identifier: Apache-2.0
//
// Executable check that a linear sliced network reproduces a standard linear
// RNN h_t = U x_t + W h_{t-1} (zero bias, zero initial state) when
// T = n^(k+1) and the layers are set to
//   layer 0:      input U, recurrent W
//   layer p >= 1: input I, recurrent W^(n^p)
// The sliced result is compared with the sequential fold and with the
// closed form  h_T = sum_i W^(T-i) U x_i.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srnn/recurrent_cells.hpp"
#include "srnn/rng.hpp"
#include "srnn/slice_geometry.hpp"
#include "srnn/tensor.hpp"

namespace srnn {

struct EquivalenceCase {
  std::size_t slice_count = 2;  // n
  std::size_t slice_times = 1;  // k
  std::size_t length = 0;       // T = n^(k+1)
  Matrix input_weight;          // U: m x d
  Matrix recurrent_weight;      // W: m x m
  std::vector<Vector> inputs;   // x_1..x_T, each of size d

  std::size_t input_dim() const { return input_weight.cols(); }
  std::size_t hidden_dim() const { return input_weight.rows(); }
};

/// Validates T = n^(k+1), n >= 2, k >= 1 and all shapes.
EquivalenceCase make_case(std::size_t n, std::size_t k, Matrix input_weight,
                          Matrix recurrent_weight, std::vector<Vector> inputs);

/// U and x entries uniform(-0.9, 0.9); W entries uniform(-0.9, 0.9) / m so
/// that W^(T-1) stays well inside double range. d = m = dim.
EquivalenceCase random_case(std::size_t n, std::size_t k, std::size_t dim, SeededRng& rng);

/// Scalar U = 1, W = 2, x = [1, 1, 1, 1] with n = 2, k = 1.
EquivalenceCase scalar_demo_case();

/// Seeded suite cycling (n, k) over (2,1), (2,2), (3,1), (4,1), (2,3) and
/// dims over 1, 3, 5.
std::vector<EquivalenceCase> default_suite(std::size_t count, std::uint64_t seed);

Vector expand_closed_form(const EquivalenceCase& c);
Vector sequential_linear(const EquivalenceCase& c);

/// One linear cell per layer, zero bias. Throws DimensionError for a
/// non-square W.
std::vector<LinearRnnParams> construct_equivalent_srnn(const EquivalenceCase& c);

struct Perturbation {
  std::size_t layer = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  double delta = 0.0;
};

struct EquivalenceReport {
  Vector sequential;
  Vector closed_form;
  Vector sliced;
  std::vector<Vector> layer0_states;
  double sequential_vs_closed = 0.0;
  double sequential_vs_sliced = 0.0;
  double closed_vs_sliced = 0.0;
  double max_error = 0.0;
  bool pass = false;
};

/// Runs all three routes; pass iff every pairwise relative error <= tol.
/// An optional perturbation is added to one recurrent weight entry of the
/// constructed sliced network.
EquivalenceReport verify_equivalence(const EquivalenceCase& c, double tol,
                                     const std::optional<Perturbation>& perturb = std::nullopt);

/// Infinity norm of dF/dW_p(row, col) for the constructed sliced network,
/// propagated forward-mode. A perturbation of size delta moves F by about
/// delta times this, so a near-zero value marks a case where the entry is
/// effectively unobservable.
double perturbation_sensitivity(const EquivalenceCase& c, std::size_t layer, std::size_t row,
                                std::size_t col);

/// `n<TAB>k<TAB>T<TAB>dims<TAB>max_rel_err<TAB>PASS|FAIL`
std::string format_report(const EquivalenceCase& c, const EquivalenceReport& r);

}  // namespace srnn
