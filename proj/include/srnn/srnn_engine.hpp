// SPDX-License-Identifier: Apache-2.0
//
// Sequential and sliced GRU networks.
//
// Every recurrence, on every layer, starts from a zero hidden state. The last
// states of layer p-1 feed layer p unchanged (identity between layers). Each
// layer owns its own GRU cell: cell 0 reads embeddings, cells p >= 1 read
// hidden states of the layer below.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "srnn/classifier.hpp"
#include "srnn/recurrent_cells.hpp"
#include "srnn/slice_geometry.hpp"
#include "srnn/thread_pool.hpp"

namespace srnn {

using TokenId = std::uint32_t;

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t embed = 0;
  std::size_t hidden = 0;
  std::size_t classes = 2;
};

struct SrnnModel {
  SlicePlan plan;
  Matrix embedding;  // V x e; row 0 is the padding token
  std::vector<GruParams> cells;
  ClassifierHead head;

  /// Embedding uniform(-0.05, 0.05) with a zero padding row; cells and head
  /// from GruParams::random / ClassifierHead::random.
  static SrnnModel create(const SlicePlan& plan, const ModelDims& dims, SeededRng& rng);

  std::size_t vocab_size() const { return embedding.rows(); }
  std::size_t embed_dim() const { return embedding.cols(); }
  std::size_t hidden_dim() const { return cells.front().hidden_dim; }
  std::size_t class_count() const { return head.class_count(); }
  std::size_t parameter_count() const;

  /// Throws DimensionError when cells, plan and head disagree.
  void validate() const;

  bool operator==(const SrnnModel&) const = default;
};

struct SubsequenceTrace {
  std::vector<GruStepCache> steps;
  Vector last;
  /// Length of the longest dependent-step chain ending at `last`.
  std::size_t depth = 0;
};

struct ForwardTrace {
  SlicePlan plan;
  std::vector<TokenId> tokens;
  /// layers[p][j] mirrors plan.layers[p].count recurrences.
  std::vector<std::vector<SubsequenceTrace>> layers;
  std::size_t critical_steps = 0;
};

struct SrnnForward {
  Vector features;  // F, the last state of the top layer
  ForwardTrace trace;
};

struct StandardForward {
  Vector last;
  std::vector<GruStepCache> steps;
  std::size_t critical_steps = 0;
};

/// Rows of `embedded` are the inputs x_1..x_T. Throws std::invalid_argument
/// for an empty sequence.
StandardForward standard_forward(const GruParams& cell, const Matrix& embedded);

/// Throws DimensionError when tokens.size() != plan length and
/// VocabularyError for ids outside the embedding table.
SrnnForward srnn_forward(const SrnnModel& model, std::span<const TokenId> tokens,
                         ThreadPool* pool = nullptr);

struct ModelGradients {
  std::map<TokenId, Vector> embedding_rows;
  std::vector<GruParams> cells;
  ClassifierHead head;

  static ModelGradients zeros_like(const SrnnModel& model);
  /// Adds other into this; rows are merged in ascending id order.
  void accumulate(const ModelGradients& other);
};

/// Gradients of a scalar whose derivative with respect to F is dF. The head
/// gradient is left at zero. Throws ConsistencyError if the trace does not
/// match the model.
ModelGradients srnn_backward(const SrnnModel& model, const ForwardTrace& trace,
                             std::span<const double> dF, ThreadPool* pool = nullptr);

/// Recurrences per reduction group. Parameter gradients are summed
/// sequentially inside a group and then group by group in ascending order,
/// so the result is independent of the worker count.
inline constexpr std::size_t kReductionGroup = 4;

/// A batch of equal-length recurrences run from zero state. Row i*steps + t of
/// `inputs` is step t of recurrence i. Returns one last state per recurrence.
/// Arithmetic matches gru_step exactly, so the result equals a serial fold of
/// gru_step for every worker count.
Matrix layer_forward_parallel(const GruParams& cell, const Matrix& inputs, std::size_t steps,
                              ThreadPool* pool = nullptr);
Matrix layer_forward_parallel(const GruParams& cell, const Matrix& inputs, std::size_t steps,
                              std::size_t workers);

struct BatchForward {
  Matrix features;  // B x m
  std::size_t critical_steps = 0;
};

/// Sliced forward over a batch of B sequences. `inputs` holds B*T rows,
/// sequence-major. The B*s_p recurrences of each layer run as one flat batch.
BatchForward sliced_forward_batch(std::span<const GruParams> cells, const SlicePlan& plan,
                                  const Matrix& inputs, std::size_t batch,
                                  ThreadPool* pool = nullptr);

struct LinearSrnnForward {
  Vector features;
  /// layer_states[p][j]: last state of recurrence j on layer p.
  std::vector<std::vector<Vector>> layer_states;
};

/// The sliced hierarchy with linear cells (one per layer), zero initial
/// states and identity between layers.
LinearSrnnForward linear_srnn_forward(std::span<const LinearRnnParams> cells,
                                      const SlicePlan& plan, std::span<const Vector> inputs);

/// Embeds token sequences (B*T ids) into the sequence-major input layout.
Matrix embed_batch(const Matrix& embedding, std::span<const TokenId> tokens);

}  // namespace srnn
