// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch training of an SrnnModel with Adam and NLL loss.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "srnn/srnn_engine.hpp"
#include "srnn/text_pipeline.hpp"

namespace srnn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment buffers, one per parameter block.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::span<const std::size_t> block_sizes, AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  std::size_t step() const { return step_; }
  std::size_t block_count() const { return first_.size(); }

  friend void adam_update(AdamState& state, std::span<const std::span<double>> params,
                          std::span<const std::span<const double>> grads);

 private:
  AdamConfig config_;
  std::size_t step_ = 0;
  std::vector<Vector> first_;
  std::vector<Vector> second_;
};

/// One bias-corrected Adam step over every block. Throws DimensionError when
/// block counts or sizes disagree with the state.
void adam_update(AdamState& state, std::span<const std::span<double>> params,
                 std::span<const std::span<const double>> grads);

/// Model parameters as blocks: embedding, each cell's nine blocks in layer
/// order, head weight, head bias.
std::vector<std::span<double>> parameter_blocks(SrnnModel& model);
std::vector<std::size_t> parameter_block_sizes(const SrnnModel& model);

/// Dense gradient blocks in parameter_blocks order.
std::vector<Vector> dense_gradients(const SrnnModel& model, const ModelGradients& grads);

struct TrainConfig {
  std::size_t batch_size = 100;
  std::size_t epochs = 5;
  std::uint64_t seed = 1;
  std::size_t hidden = 50;
  std::size_t embed = 200;
  std::size_t workers = 1;
  /// Global L2 gradient-norm clip; 0 disables.
  double clip_norm = 0.0;
  AdamConfig adam;
};

/// Documents per reduction group in a batch. Gradients are summed inside a
/// group in document order, then group by group.
inline constexpr std::size_t kBatchReductionGroup = 4;

struct BatchResult {
  double loss = 0.0;  // mean NLL over the batch
  ModelGradients grads;  // gradient of the mean loss
};

/// Forward and backward over the given examples.
BatchResult batch_gradients(const SrnnModel& model, std::span<const Example* const> batch,
                            ThreadPool* pool = nullptr);

/// Mean NLL without gradients.
double mean_loss(const SrnnModel& model, std::span<const Example> examples,
                 ThreadPool* pool = nullptr);

/// Fraction of examples whose argmax prediction equals the label.
double accuracy(const SrnnModel& model, std::span<const Example> examples,
                ThreadPool* pool = nullptr);

/// Label predictions via the batched sliced forward.
std::vector<std::size_t> predict_labels(const SrnnModel& model,
                                        std::span<const Example> examples,
                                        ThreadPool* pool = nullptr);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

/// `epoch<TAB>train_loss<TAB>val_acc<TAB>seconds`
std::string format_epoch(const EpochRecord& r);

struct TrainResult {
  std::vector<EpochRecord> log;
  SrnnModel best;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
};

/// Trains `model` in place. Each epoch visits the training split in a
/// permutation drawn from (seed, epoch), keeps the last partial batch, and
/// scores the validation split; the earliest epoch with the highest
/// validation accuracy is returned as `best`. The padding embedding row never
/// changes. Throws std::invalid_argument on an empty train or validation
/// split.
TrainResult train(SrnnModel& model, const Corpus& corpus, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace srnn
