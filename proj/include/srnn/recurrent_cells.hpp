// SPDX-License-Identifier: Apache-2.0
//
// GRU cell with an exact reverse-mode step, and the bias-free linear cell
// h_t = U x_t + W h_{t-1} + b used by the equivalence check.
//
// The GRU step is
//   r  = sigmoid(W_r x + U_r h + b_r)
//   z  = sigmoid(W_z x + U_z h + b_z)
//   c  = tanh(W_c x + U_c (r * h) + b_c)
//   h' = z * h + (1 - z) * c
// See docs/gru_backward.md for the derivative.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include "srnn/rng.hpp"
#include "srnn/tensor.hpp"

namespace srnn {

struct GruParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  Matrix input_reset;       // m x d
  Matrix recurrent_reset;   // m x m
  Vector bias_reset;        // m
  Matrix input_update;
  Matrix recurrent_update;
  Vector bias_update;
  Matrix input_candidate;
  Matrix recurrent_candidate;
  Vector bias_candidate;

  static constexpr std::size_t kBlockCount = 9;

  static GruParams zeros(std::size_t input_dim, std::size_t hidden_dim);
  /// Weights uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
  static GruParams random(std::size_t input_dim, std::size_t hidden_dim, SeededRng& rng);

  /// Blocks in serialization order: reset, update, candidate; each as
  /// (input, recurrent, bias).
  std::array<std::span<double>, kBlockCount> blocks();
  std::array<std::span<const double>, kBlockCount> blocks() const;

  std::size_t parameter_count() const;
  /// Throws DimensionError if any block disagrees with (input_dim, hidden_dim).
  void validate() const;

  bool operator==(const GruParams&) const = default;
};

/// Test hook: pin a gate to a constant instead of its sigmoid.
struct GateClamp {
  std::optional<double> reset;
  std::optional<double> update;
};

struct GruStepCache {
  Vector x;
  Vector h_prev;
  Vector reset;
  Vector update;
  Vector candidate;
  bool reset_clamped = false;
  bool update_clamped = false;
};

struct GruStep {
  Vector h;
  GruStepCache cache;
};

struct GruStepGradients {
  Vector dx;
  Vector dh_prev;
  GruParams dparams;
};

GruStep gru_step(const GruParams& p, std::span<const double> x, std::span<const double> h_prev,
                 const GateClamp& clamp = {});

GruStepGradients gru_step_backward(const GruParams& p, const GruStepCache& cache,
                                   std::span<const double> dh);

/// Same derivative as gru_step_backward, adding parameter gradients into
/// `dparams` and overwriting `dx` and `dh_prev`.
void gru_step_backward_accumulate(const GruParams& p, const GruStepCache& cache,
                                  std::span<const double> dh, GruParams& dparams,
                                  std::span<double> dx, std::span<double> dh_prev);

struct LinearRnnParams {
  Matrix input;      // U: m x d
  Matrix recurrent;  // W: m x m
  Vector bias;       // b: m

  static LinearRnnParams zeros(std::size_t input_dim, std::size_t hidden_dim);
  std::size_t input_dim() const { return input.cols(); }
  std::size_t hidden_dim() const { return input.rows(); }
};

/// h = U x + W h_prev + b
Vector linear_step(const LinearRnnParams& p, std::span<const double> x,
                   std::span<const double> h_prev);

}  // namespace srnn
