// SPDX-License-Identifier: Apache-2.0
#include "srnn/recurrent_cells.hpp"

#include <cmath>
#include <string>

#include "srnn/errors.hpp"

namespace srnn {

namespace {

void fill_uniform(Matrix& m, double scale, SeededRng& rng) {
  for (double& x : m.data()) x = rng.uniform(-scale, scale);
}

void check_block(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string("GruParams.") + name + ": " + m.shape_string() +
                         ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void check_bias(const Vector& v, std::size_t m, const char* name) {
  if (v.size() != m) {
    throw DimensionError(std::string("GruParams.") + name + ": length " +
                         std::to_string(v.size()) + ", expected " + std::to_string(m));
  }
}

void check_step_shapes(const GruParams& p, std::size_t x, std::size_t h) {
  if (x != p.input_dim || h != p.hidden_dim) {
    throw DimensionError("gru_step: x of " + std::to_string(x) + " and h of " +
                         std::to_string(h) + " against cell " + std::to_string(p.input_dim) +
                         "->" + std::to_string(p.hidden_dim));
  }
}

// W x + U h + b
Vector affine(const Matrix& w, std::span<const double> x, const Matrix& u,
              std::span<const double> h, const Vector& b) {
  Vector out = matvec(w, x);
  const Vector uh = matvec(u, h);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += uh[i] + b[i];
  return out;
}

// Parameter and input gradients of one affine pre-activation a = W x + U h + b.
void backprop_affine(const Matrix& w, const Matrix& u, std::span<const double> da,
                     std::span<const double> x, std::span<const double> h, Matrix& dw,
                     Matrix& du, Vector& db, std::span<double> dx, std::span<double> dh) {
  add_outer(dw, da, x);
  add_outer(du, da, h);
  add_into(db, da);
  matvec_transposed_accumulate(w, da, dx);
  matvec_transposed_accumulate(u, da, dh);
}

}  // namespace

GruParams GruParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  GruParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.input_reset = p.input_update = p.input_candidate = Matrix(hidden_dim, input_dim);
  p.recurrent_reset = p.recurrent_update = p.recurrent_candidate = Matrix(hidden_dim, hidden_dim);
  p.bias_reset = p.bias_update = p.bias_candidate = Vector(hidden_dim, 0.0);
  return p;
}

GruParams GruParams::random(std::size_t input_dim, std::size_t hidden_dim, SeededRng& rng) {
  GruParams p = zeros(input_dim, hidden_dim);
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double rec_scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (Matrix* m : {&p.input_reset, &p.input_update, &p.input_candidate})
    fill_uniform(*m, in_scale, rng);
  for (Matrix* m : {&p.recurrent_reset, &p.recurrent_update, &p.recurrent_candidate})
    fill_uniform(*m, rec_scale, rng);
  return p;
}

std::array<std::span<double>, GruParams::kBlockCount> GruParams::blocks() {
  return {input_reset.data(),      recurrent_reset.data(),     bias_reset,
          input_update.data(),     recurrent_update.data(),    bias_update,
          input_candidate.data(),  recurrent_candidate.data(), bias_candidate};
}

std::array<std::span<const double>, GruParams::kBlockCount> GruParams::blocks() const {
  return {input_reset.data(),      recurrent_reset.data(),     bias_reset,
          input_update.data(),     recurrent_update.data(),    bias_update,
          input_candidate.data(),  recurrent_candidate.data(), bias_candidate};
}

std::size_t GruParams::parameter_count() const {
  return 3 * (hidden_dim * input_dim + hidden_dim * hidden_dim + hidden_dim);
}

void GruParams::validate() const {
  const std::size_t m = hidden_dim;
  const std::size_t d = input_dim;
  check_block(input_reset, m, d, "input_reset");
  check_block(recurrent_reset, m, m, "recurrent_reset");
  check_bias(bias_reset, m, "bias_reset");
  check_block(input_update, m, d, "input_update");
  check_block(recurrent_update, m, m, "recurrent_update");
  check_bias(bias_update, m, "bias_update");
  check_block(input_candidate, m, d, "input_candidate");
  check_block(recurrent_candidate, m, m, "recurrent_candidate");
  check_bias(bias_candidate, m, "bias_candidate");
}

GruStep gru_step(const GruParams& p, std::span<const double> x, std::span<const double> h_prev,
                 const GateClamp& clamp) {
  check_step_shapes(p, x.size(), h_prev.size());
  const std::size_t m = p.hidden_dim;

  GruStep step;
  GruStepCache& c = step.cache;
  c.x.assign(x.begin(), x.end());
  c.h_prev.assign(h_prev.begin(), h_prev.end());

  if (clamp.reset) {
    c.reset.assign(m, *clamp.reset);
    c.reset_clamped = true;
  } else {
    c.reset = map_sigmoid(affine(p.input_reset, x, p.recurrent_reset, h_prev, p.bias_reset));
  }
  if (clamp.update) {
    c.update.assign(m, *clamp.update);
    c.update_clamped = true;
  } else {
    c.update = map_sigmoid(affine(p.input_update, x, p.recurrent_update, h_prev, p.bias_update));
  }

  const Vector gated = hadamard(c.reset, h_prev);
  c.candidate =
      map_tanh(affine(p.input_candidate, x, p.recurrent_candidate, gated, p.bias_candidate));

  step.h.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    step.h[i] = c.update[i] * h_prev[i] + (1.0 - c.update[i]) * c.candidate[i];
  }
  return step;
}

void gru_step_backward_accumulate(const GruParams& p, const GruStepCache& cache,
                                  std::span<const double> dh, GruParams& dparams,
                                  std::span<double> dx, std::span<double> dh_prev) {
  const std::size_t m = p.hidden_dim;
  if (dh.size() != m || cache.h_prev.size() != m || cache.x.size() != p.input_dim ||
      dx.size() != p.input_dim || dh_prev.size() != m || dparams.hidden_dim != m ||
      dparams.input_dim != p.input_dim) {
    throw DimensionError("gru_step_backward: gradient or cache shape does not match cell " +
                         std::to_string(p.input_dim) + "->" + std::to_string(m));
  }
  const Vector& h = cache.h_prev;
  const Vector& r = cache.reset;
  const Vector& z = cache.update;
  const Vector& c = cache.candidate;

  Vector da_update(m), da_candidate(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double dz = dh[i] * (h[i] - c[i]);
    const double dc = dh[i] * (1.0 - z[i]);
    dh_prev[i] = dh[i] * z[i];
    da_candidate[i] = dc * (1.0 - c[i] * c[i]);
    da_update[i] = cache.update_clamped ? 0.0 : dz * z[i] * (1.0 - z[i]);
  }
  for (double& v : dx) v = 0.0;

  // Candidate path; its recurrent input is r * h.
  const Vector gated = hadamard(r, h);
  Vector d_gated(m, 0.0);
  backprop_affine(p.input_candidate, p.recurrent_candidate, da_candidate, cache.x, gated,
                  dparams.input_candidate, dparams.recurrent_candidate, dparams.bias_candidate,
                  dx, d_gated);
  Vector da_reset(m);
  for (std::size_t i = 0; i < m; ++i) {
    dh_prev[i] += d_gated[i] * r[i];
    da_reset[i] = cache.reset_clamped ? 0.0 : d_gated[i] * h[i] * r[i] * (1.0 - r[i]);
  }

  backprop_affine(p.input_update, p.recurrent_update, da_update, cache.x, h,
                  dparams.input_update, dparams.recurrent_update, dparams.bias_update, dx,
                  dh_prev);
  backprop_affine(p.input_reset, p.recurrent_reset, da_reset, cache.x, h, dparams.input_reset,
                  dparams.recurrent_reset, dparams.bias_reset, dx, dh_prev);
}

GruStepGradients gru_step_backward(const GruParams& p, const GruStepCache& cache,
                                   std::span<const double> dh) {
  GruStepGradients g{Vector(p.input_dim, 0.0), Vector(p.hidden_dim, 0.0),
                     GruParams::zeros(p.input_dim, p.hidden_dim)};
  gru_step_backward_accumulate(p, cache, dh, g.dparams, g.dx, g.dh_prev);
  return g;
}

LinearRnnParams LinearRnnParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  return {Matrix(hidden_dim, input_dim), Matrix(hidden_dim, hidden_dim),
          Vector(hidden_dim, 0.0)};
}

Vector linear_step(const LinearRnnParams& p, std::span<const double> x,
                   std::span<const double> h_prev) {
  if (p.recurrent.rows() != p.hidden_dim() || !p.recurrent.square() ||
      p.bias.size() != p.hidden_dim() || x.size() != p.input_dim() ||
      h_prev.size() != p.hidden_dim()) {
    throw DimensionError("linear_step: U " + p.input.shape_string() + ", W " +
                         p.recurrent.shape_string() + ", x of " + std::to_string(x.size()) +
                         ", h of " + std::to_string(h_prev.size()));
  }
  Vector h = matvec(p.input, x);
  const Vector wh = matvec(p.recurrent, h_prev);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += wh[i] + p.bias[i];
  return h;
}

}  // namespace srnn
