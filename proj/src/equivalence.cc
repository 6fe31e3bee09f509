// SPDX-License-Identifier: Apache-2.0
#include "srnn/equivalence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "srnn/errors.hpp"
#include "srnn/srnn_engine.hpp"

namespace srnn {

EquivalenceCase make_case(std::size_t n, std::size_t k, Matrix input_weight,
                          Matrix recurrent_weight, std::vector<Vector> inputs) {
  if (n < 2 || k < 1) {
    throw std::invalid_argument("equivalence case: need n >= 2 and k >= 1");
  }
  const std::size_t length = slice_power(n, k + 1);
  if (inputs.size() != length) {
    throw DivisibilityError("equivalence case: T = " + std::to_string(inputs.size()) +
                            " but n^(k+1) = " + std::to_string(length));
  }
  if (!recurrent_weight.square() || recurrent_weight.rows() != input_weight.rows()) {
    throw DimensionError("equivalence case: U " + input_weight.shape_string() + ", W " +
                         recurrent_weight.shape_string());
  }
  for (const auto& x : inputs) {
    if (x.size() != input_weight.cols()) {
      throw DimensionError("equivalence case: input of " + std::to_string(x.size()) +
                           " against U " + input_weight.shape_string());
    }
  }
  return {n, k, length, std::move(input_weight), std::move(recurrent_weight), std::move(inputs)};
}

EquivalenceCase random_case(std::size_t n, std::size_t k, std::size_t dim, SeededRng& rng) {
  Matrix u(dim, dim);
  Matrix w(dim, dim);
  for (double& x : u.data()) x = rng.uniform(-0.9, 0.9);
  for (double& x : w.data()) x = rng.uniform(-0.9, 0.9) / static_cast<double>(dim);
  std::vector<Vector> inputs(slice_power(n, k + 1), Vector(dim));
  for (auto& x : inputs)
    for (double& v : x) v = rng.uniform(-0.9, 0.9);
  return make_case(n, k, std::move(u), std::move(w), std::move(inputs));
}

EquivalenceCase scalar_demo_case() {
  return make_case(2, 1, Matrix(1, 1, 1.0), Matrix(1, 1, 2.0), std::vector<Vector>(4, Vector{1.0}));
}

std::vector<EquivalenceCase> default_suite(std::size_t count, std::uint64_t seed) {
  static constexpr std::array<std::pair<std::size_t, std::size_t>, 5> kShapes = {
      {{2, 1}, {2, 2}, {3, 1}, {4, 1}, {2, 3}}};
  static constexpr std::array<std::size_t, 3> kDims = {1, 3, 5};
  SeededRng rng(seed);
  std::vector<EquivalenceCase> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto [n, k] = kShapes[i % kShapes.size()];
    out.push_back(random_case(n, k, kDims[(i / kShapes.size()) % kDims.size()], rng));
  }
  return out;
}

Vector expand_closed_form(const EquivalenceCase& c) {
  Vector h(c.hidden_dim(), 0.0);
  for (std::size_t i = 0; i < c.length; ++i) {
    const Vector ux = matvec(c.input_weight, c.inputs[i]);
    add_into(h, matvec(matrix_power(c.recurrent_weight, c.length - 1 - i), ux));
  }
  return h;
}

Vector sequential_linear(const EquivalenceCase& c) {
  const LinearRnnParams cell{c.input_weight, c.recurrent_weight, Vector(c.hidden_dim(), 0.0)};
  Vector h(c.hidden_dim(), 0.0);
  for (const auto& x : c.inputs) h = linear_step(cell, x, h);
  return h;
}

std::vector<LinearRnnParams> construct_equivalent_srnn(const EquivalenceCase& c) {
  if (!c.recurrent_weight.square()) {
    throw DimensionError("construct_equivalent_srnn: non-square W " +
                         c.recurrent_weight.shape_string());
  }
  const std::size_t m = c.hidden_dim();
  std::vector<LinearRnnParams> cells;
  cells.push_back({c.input_weight, c.recurrent_weight, Vector(m, 0.0)});
  for (std::size_t p = 1; p <= c.slice_times; ++p) {
    cells.push_back({Matrix::identity(m),
                     matrix_power(c.recurrent_weight, slice_power(c.slice_count, p)),
                     Vector(m, 0.0)});
  }
  return cells;
}

EquivalenceReport verify_equivalence(const EquivalenceCase& c, double tol,
                                     const std::optional<Perturbation>& perturb) {
  std::vector<LinearRnnParams> cells = construct_equivalent_srnn(c);
  if (perturb) {
    if (perturb->layer >= cells.size()) {
      throw IndexError("perturbation layer " + std::to_string(perturb->layer) + " outside " +
                       std::to_string(cells.size()));
    }
    Matrix& w = cells[perturb->layer].recurrent;
    if (perturb->row >= w.rows() || perturb->col >= w.cols()) {
      throw IndexError("perturbation entry outside " + w.shape_string());
    }
    w(perturb->row, perturb->col) += perturb->delta;
  }
  const SlicePlan plan = build_plan({c.length, c.slice_count, c.slice_times});
  LinearSrnnForward sliced = linear_srnn_forward(cells, plan, c.inputs);

  EquivalenceReport r;
  r.sequential = sequential_linear(c);
  r.closed_form = expand_closed_form(c);
  r.sliced = std::move(sliced.features);
  r.layer0_states = std::move(sliced.layer_states.front());
  r.sequential_vs_closed = relative_error(r.sequential, r.closed_form);
  r.sequential_vs_sliced = relative_error(r.sequential, r.sliced);
  r.closed_vs_sliced = relative_error(r.closed_form, r.sliced);
  r.max_error = std::max({r.sequential_vs_closed, r.sequential_vs_sliced, r.closed_vs_sliced});
  r.pass = r.max_error <= tol;
  return r;
}

double perturbation_sensitivity(const EquivalenceCase& c, std::size_t layer, std::size_t row,
                                std::size_t col) {
  const std::vector<LinearRnnParams> cells = construct_equivalent_srnn(c);
  if (layer >= cells.size()) {
    throw IndexError("perturbation layer " + std::to_string(layer) + " outside " +
                     std::to_string(cells.size()));
  }
  const std::size_t m = c.hidden_dim();
  if (row >= m || col >= m) {
    throw IndexError("perturbation entry outside " + cells[layer].recurrent.shape_string());
  }
  const SlicePlan plan = build_plan({c.length, c.slice_count, c.slice_times});

  // Each state travels with its tangent; inputs to layer 0 carry none.
  struct Dual {
    Vector value;
    Vector tangent;
  };
  const Dual zero{Vector(m, 0.0), Vector(m, 0.0)};
  auto step = [&](std::size_t p, const Dual& h, const Vector& x, const Vector* dx) {
    const LinearRnnParams& cell = cells[p];
    Dual out{linear_step(cell, x, h.value), matvec(cell.recurrent, h.tangent)};
    if (dx) add_into(out.tangent, matvec(cell.input, *dx));
    if (p == layer) out.tangent[row] += h.value[col];
    return out;
  };

  std::vector<Dual> below;
  const std::size_t l0 = plan.min_length;
  for (std::size_t i = 0; i < plan.min_count(); ++i) {
    Dual h = zero;
    for (std::size_t t = 0; t < l0; ++t) h = step(0, h, c.inputs[i * l0 + t], nullptr);
    below.push_back(std::move(h));
  }
  for (std::size_t p = 1; p < plan.layer_count(); ++p) {
    std::vector<Dual> next;
    for (std::size_t j = 0; j < plan.layers[p].count; ++j) {
      const IndexRange children = child_range(plan, p, j);
      Dual h = zero;
      for (std::size_t t = children.begin; t < children.end; ++t) {
        h = step(p, h, below[t].value, &below[t].tangent);
      }
      next.push_back(std::move(h));
    }
    below = std::move(next);
  }
  double norm = 0.0;
  for (double v : below.front().tangent) norm = std::max(norm, std::abs(v));
  return norm;
}

std::string format_report(const EquivalenceCase& c, const EquivalenceReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu\t%zu\t%zu\t%zu\t%.3e\t%s", c.slice_count, c.slice_times,
                c.length, c.hidden_dim(), r.max_error, r.pass ? "PASS" : "FAIL");
  return buf;
}

}  // namespace srnn
