// SPDX-License-Identifier: Apache-2.0
#include "srnn/srnn_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "srnn/errors.hpp"

namespace srnn {

namespace {

void add_params(GruParams& acc, const GruParams& g) {
  auto dst = acc.blocks();
  const auto src = g.blocks();
  for (std::size_t b = 0; b < dst.size(); ++b) add_into(dst[b], src[b]);
}

void check_tokens(std::span<const TokenId> tokens, std::size_t vocab) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= vocab) {
      throw VocabularyError("token id " + std::to_string(tokens[i]) + " at position " +
                            std::to_string(i) + " outside vocabulary of " +
                            std::to_string(vocab));
    }
  }
}

// Runs one recurrence of `steps` inputs from zero state, recording caches.
SubsequenceTrace run_traced(const GruParams& cell, std::span<const Vector* const> inputs,
                            std::span<const std::size_t> input_depths) {
  SubsequenceTrace out;
  out.steps.reserve(inputs.size());
  Vector h(cell.hidden_dim, 0.0);
  std::size_t depth = 0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    GruStep step = gru_step(cell, *inputs[t], h);
    depth = std::max(depth, input_depths[t]) + 1;
    h = std::move(step.h);
    out.steps.push_back(std::move(step.cache));
  }
  out.last = std::move(h);
  out.depth = depth;
  return out;
}

// BPTT through one recurrence. Parameter gradients go into `dparams`; the
// gradient for each step's input is written to dinputs[t].
void backprop_recurrence(const GruParams& cell, const SubsequenceTrace& sub,
                         std::span<const double> dlast, GruParams& dparams,
                         std::span<Vector> dinputs) {
  Vector dh(dlast.begin(), dlast.end());
  Vector dh_prev(cell.hidden_dim);
  for (std::size_t t = sub.steps.size(); t-- > 0;) {
    Vector& dx = dinputs[t];
    dx.assign(cell.input_dim, 0.0);
    gru_step_backward_accumulate(cell, sub.steps[t], dh, dparams, dx, dh_prev);
    std::swap(dh, dh_prev);
  }
}

void check_trace(const SrnnModel& model, const ForwardTrace& trace) {
  const SlicePlan& plan = model.plan;
  if (!(trace.plan == plan) || trace.layers.size() != plan.layer_count() ||
      trace.tokens.size() != plan.length) {
    throw ConsistencyError("srnn_backward: trace was recorded under a different slice plan");
  }
  for (std::size_t p = 0; p < plan.layer_count(); ++p) {
    const auto& layer = trace.layers[p];
    if (layer.size() != plan.layers[p].count) {
      throw ConsistencyError("srnn_backward: layer " + std::to_string(p) + " has " +
                             std::to_string(layer.size()) + " recurrences in the trace");
    }
    const GruParams& cell = model.cells[p];
    for (const auto& sub : layer) {
      if (sub.steps.size() != plan.layers[p].length) {
        throw ConsistencyError("srnn_backward: recurrence length mismatch on layer " +
                               std::to_string(p));
      }
      for (const auto& c : sub.steps) {
        if (c.x.size() != cell.input_dim || c.h_prev.size() != cell.hidden_dim ||
            c.reset.size() != cell.hidden_dim || c.update.size() != cell.hidden_dim ||
            c.candidate.size() != cell.hidden_dim) {
          throw ConsistencyError("srnn_backward: cached step shape differs from cell " +
                                 std::to_string(p));
        }
      }
    }
  }
}

// GRU weights transposed so that each step is a sequence of row updates over
// contiguous memory.
struct PackedGru {
  std::size_t d = 0;
  std::size_t m = 0;
  Matrix input_t;                // d x 3m: [reset | update | candidate]
  Matrix recurrent_gates_t;      // m x 2m: [reset | update]
  Matrix recurrent_candidate_t;  // m x m
  Vector bias;                   // 3m

  explicit PackedGru(const GruParams& p)
      : d(p.input_dim),
        m(p.hidden_dim),
        input_t(p.input_dim, 3 * p.hidden_dim),
        recurrent_gates_t(p.hidden_dim, 2 * p.hidden_dim),
        recurrent_candidate_t(p.hidden_dim, p.hidden_dim),
        bias(3 * p.hidden_dim) {
    const Matrix* inputs[3] = {&p.input_reset, &p.input_update, &p.input_candidate};
    const Vector* biases[3] = {&p.bias_reset, &p.bias_update, &p.bias_candidate};
    for (std::size_t g = 0; g < 3; ++g) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < d; ++k) input_t(k, g * m + i) = (*inputs[g])(i, k);
        bias[g * m + i] = (*biases[g])[i];
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < m; ++k) {
        recurrent_gates_t(k, i) = p.recurrent_reset(i, k);
        recurrent_gates_t(k, m + i) = p.recurrent_update(i, k);
        recurrent_candidate_t(k, i) = p.recurrent_candidate(i, k);
      }
    }
  }
};

// One recurrence from zero state. The summation order per pre-activation is
// (W x) + ((U h) + b) with both products accumulated over ascending k, the
// same sequence of operations gru_step performs.
void run_packed(const PackedGru& g, const double* x, std::size_t steps, double* h_out,
                std::vector<double>& scratch) {
  const std::size_t m = g.m;
  const std::size_t d = g.d;
  scratch.assign(3 * m + 3 * m + m, 0.0);
  double* wx = scratch.data();
  double* uh = wx + 3 * m;
  double* h = uh + 3 * m;
  for (std::size_t t = 0; t < steps; ++t, x += d) {
    std::fill(wx, wx + 3 * m, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      const double xk = x[k];
      const double* w = g.input_t.row(k).data();
      for (std::size_t j = 0; j < 3 * m; ++j) wx[j] += w[j] * xk;
    }
    std::fill(uh, uh + 3 * m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double hk = h[k];
      const double* u = g.recurrent_gates_t.row(k).data();
      for (std::size_t j = 0; j < 2 * m; ++j) uh[j] += u[j] * hk;
    }
    // Reuse wx[0:2m] for the gates.
    for (std::size_t j = 0; j < 2 * m; ++j) wx[j] = sigmoid(wx[j] + (uh[j] + g.bias[j]));
    const double* r = wx;
    const double* z = wx + m;
    double* uc = uh + 2 * m;
    for (std::size_t k = 0; k < m; ++k) {
      const double gated = r[k] * h[k];
      const double* u = g.recurrent_candidate_t.row(k).data();
      for (std::size_t j = 0; j < m; ++j) uc[j] += u[j] * gated;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double c = std::tanh(wx[2 * m + j] + (uc[j] + g.bias[2 * m + j]));
      h[j] = z[j] * h[j] + (1.0 - z[j]) * c;
    }
  }
  std::copy(h, h + m, h_out);
}

Matrix run_layer(const PackedGru& packed, const Matrix& inputs, std::size_t steps,
                 ThreadPool* pool) {
  if (steps == 0 || inputs.rows() == 0 || inputs.rows() % steps != 0 ||
      inputs.cols() != packed.d) {
    throw DimensionError("layer_forward_parallel: inputs " + inputs.shape_string() + " with " +
                         std::to_string(steps) + " steps per recurrence against cell input " +
                         std::to_string(packed.d));
  }
  const std::size_t count = inputs.rows() / steps;
  Matrix out(count, packed.m);
  auto body = [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch;
    for (std::size_t i = begin; i < end; ++i) {
      run_packed(packed, inputs.row(i * steps).data(), steps, out.row(i).data(), scratch);
    }
  };
  if (pool == nullptr) {
    body(0, count);
  } else {
    pool->parallel_chunks(count, body);
  }
  return out;
}

}  // namespace

SrnnModel SrnnModel::create(const SlicePlan& plan, const ModelDims& dims, SeededRng& rng) {
  if (dims.vocab < 1 || dims.embed < 1 || dims.hidden < 1 || dims.classes < 1) {
    throw std::invalid_argument("SrnnModel::create: all dimensions must be positive");
  }
  SrnnModel model;
  model.plan = plan;
  model.embedding = Matrix(dims.vocab, dims.embed);
  for (std::size_t r = 1; r < dims.vocab; ++r)
    for (double& x : model.embedding.row(r)) x = rng.uniform(-0.05, 0.05);
  for (std::size_t p = 0; p < plan.layer_count(); ++p) {
    model.cells.push_back(GruParams::random(p == 0 ? dims.embed : dims.hidden, dims.hidden, rng));
  }
  model.head = ClassifierHead::random(dims.classes, dims.hidden, rng);
  return model;
}

std::size_t SrnnModel::parameter_count() const {
  std::size_t total = embedding.size() + head.weight.size() + head.bias.size();
  for (const auto& c : cells) total += c.parameter_count();
  return total;
}

void SrnnModel::validate() const {
  if (cells.size() != plan.layer_count()) {
    throw DimensionError("SrnnModel: " + std::to_string(cells.size()) + " cells for " +
                         std::to_string(plan.layer_count()) + " layers");
  }
  for (std::size_t p = 0; p < cells.size(); ++p) {
    cells[p].validate();
    const std::size_t expected_in = p == 0 ? embed_dim() : cells[p - 1].hidden_dim;
    if (cells[p].input_dim != expected_in || cells[p].hidden_dim != hidden_dim()) {
      throw DimensionError("SrnnModel: cell " + std::to_string(p) + " is " +
                           std::to_string(cells[p].input_dim) + "->" +
                           std::to_string(cells[p].hidden_dim) + ", expected " +
                           std::to_string(expected_in) + "->" + std::to_string(hidden_dim()));
    }
  }
  if (head.weight.cols() != hidden_dim() || head.bias.size() != head.weight.rows()) {
    throw DimensionError("SrnnModel: head " + head.weight.shape_string() +
                         " does not read hidden size " + std::to_string(hidden_dim()));
  }
}

StandardForward standard_forward(const GruParams& cell, const Matrix& embedded) {
  if (embedded.rows() == 0) throw std::invalid_argument("standard_forward: empty sequence");
  StandardForward out;
  out.steps.reserve(embedded.rows());
  Vector h(cell.hidden_dim, 0.0);
  for (std::size_t t = 0; t < embedded.rows(); ++t) {
    GruStep step = gru_step(cell, embedded.row(t), h);
    h = std::move(step.h);
    out.steps.push_back(std::move(step.cache));
    ++out.critical_steps;
  }
  out.last = std::move(h);
  return out;
}

SrnnForward srnn_forward(const SrnnModel& model, std::span<const TokenId> tokens,
                         ThreadPool* pool) {
  const SlicePlan& plan = model.plan;
  if (tokens.size() != plan.length) {
    throw DimensionError("srnn_forward: sequence of " + std::to_string(tokens.size()) +
                         " tokens, plan expects " + std::to_string(plan.length));
  }
  check_tokens(tokens, model.vocab_size());

  SrnnForward out;
  ForwardTrace& trace = out.trace;
  trace.plan = plan;
  trace.tokens.assign(tokens.begin(), tokens.end());
  trace.layers.resize(plan.layer_count());

  // Layer 0 reads embedding rows.
  std::vector<Vector> embedded(plan.length);
  for (std::size_t t = 0; t < plan.length; ++t) {
    const auto row = model.embedding.row(tokens[t]);
    embedded[t].assign(row.begin(), row.end());
  }
  {
    const std::size_t l0 = plan.min_length;
    const std::vector<std::size_t> zero_depths(l0, 0);
    auto& layer = trace.layers[0];
    layer.resize(plan.min_count());
    parallel_for(pool, layer.size(), [&](std::size_t i) {
      std::vector<const Vector*> inputs(l0);
      for (std::size_t t = 0; t < l0; ++t) inputs[t] = &embedded[i * l0 + t];
      layer[i] = run_traced(model.cells[0], inputs, zero_depths);
    });
  }

  for (std::size_t p = 1; p < plan.layer_count(); ++p) {
    const auto& below = trace.layers[p - 1];
    auto& layer = trace.layers[p];
    layer.resize(plan.layers[p].count);
    parallel_for(pool, layer.size(), [&](std::size_t j) {
      const IndexRange children = child_range(plan, p, j);
      std::vector<const Vector*> inputs;
      std::vector<std::size_t> depths;
      for (std::size_t c = children.begin; c < children.end; ++c) {
        inputs.push_back(&below[c].last);
        depths.push_back(below[c].depth);
      }
      layer[j] = run_traced(model.cells[p], inputs, depths);
    });
  }

  const SubsequenceTrace& top = trace.layers.back().front();
  trace.critical_steps = top.depth;
  out.features = top.last;
  return out;
}

ModelGradients ModelGradients::zeros_like(const SrnnModel& model) {
  ModelGradients g;
  for (const auto& c : model.cells) g.cells.push_back(GruParams::zeros(c.input_dim, c.hidden_dim));
  g.head = ClassifierHead::zeros(model.class_count(), model.head.hidden_dim());
  return g;
}

void ModelGradients::accumulate(const ModelGradients& other) {
  if (other.cells.size() != cells.size()) {
    throw DimensionError("ModelGradients::accumulate: layer count mismatch");
  }
  for (const auto& [id, row] : other.embedding_rows) {
    auto [it, inserted] = embedding_rows.try_emplace(id, row);
    if (!inserted) add_into(it->second, row);
  }
  for (std::size_t p = 0; p < cells.size(); ++p) add_params(cells[p], other.cells[p]);
  add_into(head.weight.data(), other.head.weight.data());
  add_into(head.bias, other.head.bias);
}

ModelGradients srnn_backward(const SrnnModel& model, const ForwardTrace& trace,
                             std::span<const double> dF, ThreadPool* pool) {
  check_trace(model, trace);
  if (dF.size() != model.hidden_dim()) {
    throw DimensionError("srnn_backward: dF of " + std::to_string(dF.size()) +
                         " for hidden size " + std::to_string(model.hidden_dim()));
  }
  const SlicePlan& plan = model.plan;
  ModelGradients grads = ModelGradients::zeros_like(model);

  // dlast[j]: gradient flowing into the last state of recurrence j of the
  // current layer.
  std::vector<Vector> dlast{Vector(dF.begin(), dF.end())};
  for (std::size_t p = plan.layer_count(); p-- > 0;) {
    const GruParams& cell = model.cells[p];
    const auto& layer = trace.layers[p];
    const std::size_t count = layer.size();
    const std::size_t steps = plan.layers[p].length;
    const std::size_t groups = (count + kReductionGroup - 1) / kReductionGroup;

    // dinputs[j * steps + t]: gradient w.r.t. the input of step t of recurrence j.
    std::vector<Vector> dinputs(count * steps);
    std::vector<GruParams> partials(groups, GruParams::zeros(cell.input_dim, cell.hidden_dim));
    parallel_for(pool, groups, [&](std::size_t g) {
      const std::size_t end = std::min(count, (g + 1) * kReductionGroup);
      for (std::size_t j = g * kReductionGroup; j < end; ++j) {
        backprop_recurrence(cell, layer[j], dlast[j], partials[g],
                            std::span<Vector>(dinputs).subspan(j * steps, steps));
      }
    });
    for (const auto& partial : partials) add_params(grads.cells[p], partial);

    if (p == 0) {
      for (std::size_t t = 0; t < plan.length; ++t) {
        auto [it, inserted] = grads.embedding_rows.try_emplace(trace.tokens[t], dinputs[t]);
        if (!inserted) add_into(it->second, dinputs[t]);
      }
    } else {
      // Recurrence j's step t read the last state of child j*n + t, which is
      // exactly flat index j*steps + t.
      dlast = std::move(dinputs);
    }
  }
  return grads;
}

Matrix layer_forward_parallel(const GruParams& cell, const Matrix& inputs, std::size_t steps,
                              ThreadPool* pool) {
  cell.validate();
  return run_layer(PackedGru(cell), inputs, steps, pool);
}

Matrix layer_forward_parallel(const GruParams& cell, const Matrix& inputs, std::size_t steps,
                              std::size_t workers) {
  ThreadPool pool(workers);
  return layer_forward_parallel(cell, inputs, steps, &pool);
}

BatchForward sliced_forward_batch(std::span<const GruParams> cells, const SlicePlan& plan,
                                  const Matrix& inputs, std::size_t batch, ThreadPool* pool) {
  if (cells.size() != plan.layer_count()) {
    throw DimensionError("sliced_forward_batch: " + std::to_string(cells.size()) +
                         " cells for " + std::to_string(plan.layer_count()) + " layers");
  }
  if (inputs.rows() != batch * plan.length) {
    throw DimensionError("sliced_forward_batch: " + std::to_string(inputs.rows()) +
                         " input rows for batch " + std::to_string(batch) + " of length " +
                         std::to_string(plan.length));
  }
  BatchForward out;
  // Sequence-major rows already form B*s0 recurrences of l0 steps, and the
  // B*s_{p-1} last states of a layer form B*s_p recurrences of n steps.
  Matrix states = layer_forward_parallel(cells[0], inputs, plan.min_length, pool);
  out.critical_steps = plan.min_length;
  for (std::size_t p = 1; p < plan.layer_count(); ++p) {
    states = layer_forward_parallel(cells[p], states, plan.layers[p].length, pool);
    out.critical_steps += plan.layers[p].length;
  }
  out.features = std::move(states);
  return out;
}

LinearSrnnForward linear_srnn_forward(std::span<const LinearRnnParams> cells,
                                      const SlicePlan& plan, std::span<const Vector> inputs) {
  if (cells.size() != plan.layer_count() || inputs.size() != plan.length) {
    throw DimensionError("linear_srnn_forward: " + std::to_string(cells.size()) + " cells and " +
                         std::to_string(inputs.size()) + " inputs for plan with " +
                         std::to_string(plan.layer_count()) + " layers over length " +
                         std::to_string(plan.length));
  }
  LinearSrnnForward out;
  out.layer_states.resize(plan.layer_count());
  auto run = [](const LinearRnnParams& cell, auto&& input_at, std::size_t steps) {
    Vector h(cell.hidden_dim(), 0.0);
    for (std::size_t t = 0; t < steps; ++t) h = linear_step(cell, input_at(t), h);
    return h;
  };
  const std::size_t l0 = plan.min_length;
  for (std::size_t i = 0; i < plan.min_count(); ++i) {
    out.layer_states[0].push_back(
        run(cells[0], [&](std::size_t t) -> const Vector& { return inputs[i * l0 + t]; }, l0));
  }
  for (std::size_t p = 1; p < plan.layer_count(); ++p) {
    const auto& below = out.layer_states[p - 1];
    for (std::size_t j = 0; j < plan.layers[p].count; ++j) {
      const IndexRange children = child_range(plan, p, j);
      out.layer_states[p].push_back(run(
          cells[p], [&](std::size_t t) -> const Vector& { return below[children.begin + t]; },
          children.size()));
    }
  }
  out.features = out.layer_states.back().front();
  return out;
}

Matrix embed_batch(const Matrix& embedding, std::span<const TokenId> tokens) {
  check_tokens(tokens, embedding.rows());
  Matrix out(tokens.size(), embedding.cols());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto row = embedding.row(tokens[i]);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace srnn
