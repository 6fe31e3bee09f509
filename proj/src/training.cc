// SPDX-License-Identifier: Apache-2.0
#include "srnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "srnn/errors.hpp"

namespace srnn {

namespace {

constexpr std::size_t kInferenceChunk = 256;

// Batched sliced forward over examples, in chunks.
Matrix features_of(const SrnnModel& model, std::span<const Example> examples, ThreadPool* pool) {
  Matrix out(examples.size(), model.hidden_dim());
  std::vector<TokenId> ids;
  for (std::size_t begin = 0; begin < examples.size(); begin += kInferenceChunk) {
    const std::size_t end = std::min(examples.size(), begin + kInferenceChunk);
    ids.clear();
    for (std::size_t i = begin; i < end; ++i) {
      if (examples[i].ids.size() != model.plan.length) {
        throw DimensionError("example " + std::to_string(i) + " has " +
                             std::to_string(examples[i].ids.size()) + " ids, model expects " +
                             std::to_string(model.plan.length));
      }
      ids.insert(ids.end(), examples[i].ids.begin(), examples[i].ids.end());
    }
    const BatchForward fwd = sliced_forward_batch(
        model.cells, model.plan, embed_batch(model.embedding, ids), end - begin, pool);
    for (std::size_t i = begin; i < end; ++i) {
      const auto src = fwd.features.row(i - begin);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
  }
  return out;
}

}  // namespace

AdamState::AdamState(std::span<const std::size_t> block_sizes, AdamConfig config)
    : config_(config) {
  for (std::size_t n : block_sizes) {
    first_.emplace_back(n, 0.0);
    second_.emplace_back(n, 0.0);
  }
}

void adam_update(AdamState& state, std::span<const std::span<double>> params,
                 std::span<const std::span<const double>> grads) {
  if (params.size() != state.first_.size() || grads.size() != params.size()) {
    throw DimensionError("adam_update: " + std::to_string(params.size()) + " parameter and " +
                         std::to_string(grads.size()) + " gradient blocks for a state of " +
                         std::to_string(state.first_.size()));
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != state.first_[b].size() || grads[b].size() != params[b].size()) {
      throw DimensionError("adam_update: block " + std::to_string(b) + " size mismatch");
    }
  }
  const AdamConfig& c = state.config_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    const auto g = grads[b];
    auto& m = state.first_[b];
    auto& v = state.second_[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

std::vector<std::span<double>> parameter_blocks(SrnnModel& model) {
  std::vector<std::span<double>> out{model.embedding.data()};
  for (auto& cell : model.cells)
    for (auto block : cell.blocks()) out.push_back(block);
  out.push_back(model.head.weight.data());
  out.push_back(model.head.bias);
  return out;
}

std::vector<std::size_t> parameter_block_sizes(const SrnnModel& model) {
  std::vector<std::size_t> out{model.embedding.size()};
  for (const auto& cell : model.cells)
    for (auto block : cell.blocks()) out.push_back(block.size());
  out.push_back(model.head.weight.size());
  out.push_back(model.head.bias.size());
  return out;
}

std::vector<Vector> dense_gradients(const SrnnModel& model, const ModelGradients& grads) {
  std::vector<Vector> out;
  Vector embed(model.embedding.size(), 0.0);
  const std::size_t e = model.embed_dim();
  for (const auto& [id, row] : grads.embedding_rows) {
    if (id >= model.vocab_size() || row.size() != e) {
      throw DimensionError("dense_gradients: embedding row " + std::to_string(id));
    }
    std::copy(row.begin(), row.end(), embed.begin() + static_cast<std::ptrdiff_t>(id * e));
  }
  out.push_back(std::move(embed));
  for (const auto& cell : grads.cells)
    for (auto block : cell.blocks()) out.emplace_back(block.begin(), block.end());
  out.emplace_back(grads.head.weight.data().begin(), grads.head.weight.data().end());
  out.push_back(grads.head.bias);
  return out;
}

BatchResult batch_gradients(const SrnnModel& model, std::span<const Example* const> batch,
                            ThreadPool* pool) {
  if (batch.empty()) throw std::invalid_argument("batch_gradients: empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  const std::size_t groups = (batch.size() + kBatchReductionGroup - 1) / kBatchReductionGroup;

  std::vector<ModelGradients> partial(groups, ModelGradients::zeros_like(model));
  std::vector<double> partial_loss(groups, 0.0);
  parallel_for(pool, groups, [&](std::size_t g) {
    const std::size_t end = std::min(batch.size(), (g + 1) * kBatchReductionGroup);
    Vector dF(model.hidden_dim());
    for (std::size_t i = g * kBatchReductionGroup; i < end; ++i) {
      const Example& ex = *batch[i];
      if (ex.label >= model.class_count()) {
        throw std::invalid_argument("batch_gradients: label " + std::to_string(ex.label) +
                                    " outside " + std::to_string(model.class_count()) +
                                    " classes");
      }
      SrnnForward fwd = srnn_forward(model, ex.ids);
      NllResult nll = nll_loss(predict(model.head, fwd.features), ex.label);
      partial_loss[g] += nll.loss;
      for (double& d : nll.dlogits) d *= scale;
      head_backward_accumulate(model.head, fwd.features, nll.dlogits, partial[g].head, dF);
      partial[g].accumulate(srnn_backward(model, fwd.trace, dF));
    }
  });

  BatchResult out{0.0, ModelGradients::zeros_like(model)};
  double loss_sum = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    out.grads.accumulate(partial[g]);
    loss_sum += partial_loss[g];
  }
  out.loss = loss_sum * scale;
  return out;
}

std::vector<std::size_t> predict_labels(const SrnnModel& model,
                                        std::span<const Example> examples, ThreadPool* pool) {
  const Matrix features = features_of(model, examples, pool);
  std::vector<std::size_t> out(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out[i] = argmax(logits(model.head, features.row(i)));
  }
  return out;
}

double accuracy(const SrnnModel& model, std::span<const Example> examples, ThreadPool* pool) {
  if (examples.empty()) throw std::invalid_argument("accuracy: empty split");
  const auto labels = predict_labels(model, examples, pool);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) correct += labels[i] == examples[i].label;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

double mean_loss(const SrnnModel& model, std::span<const Example> examples, ThreadPool* pool) {
  if (examples.empty()) throw std::invalid_argument("mean_loss: empty split");
  const Matrix features = features_of(model, examples, pool);
  double total = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    total += nll_loss(predict(model.head, features.row(i)), examples[i].label).loss;
  }
  return total / static_cast<double>(examples.size());
}

std::string format_epoch(const EpochRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.4f\t%.3f", r.epoch, r.train_loss, r.val_accuracy,
                r.seconds);
  return buf;
}

TrainResult train(SrnnModel& model, const Corpus& corpus, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  if (corpus.train.empty()) throw std::invalid_argument("train: empty training split");
  if (corpus.val.empty()) throw std::invalid_argument("train: empty validation split");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  model.validate();

  ThreadPool pool(std::max<std::size_t>(1, cfg.workers));
  AdamState adam(parameter_block_sizes(model), cfg.adam);

  TrainResult result;
  result.best = model;
  result.best_val_accuracy = -1.0;

  std::vector<std::size_t> order(corpus.train.size());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    SeededRng shuffle_rng = SeededRng::derive(cfg.seed, 0xe90c + epoch);
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::vector<const Example*> batch;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&corpus.train[order[i]]);

      BatchResult br = batch_gradients(model, batch, &pool);
      loss_sum += br.loss * static_cast<double>(batch.size());

      std::vector<Vector> grads = dense_gradients(model, br.grads);
      // Padding row stays at zero.
      std::fill_n(grads.front().begin(), model.embed_dim(), 0.0);
      if (cfg.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& g : grads)
          for (double x : g) sq += x * x;
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm) {
          const double s = cfg.clip_norm / norm;
          for (auto& g : grads)
            for (double& x : g) x *= s;
        }
      }
      std::vector<std::span<const double>> grad_views(grads.begin(), grads.end());
      adam_update(adam, parameter_blocks(model), grad_views);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_accuracy = accuracy(model, corpus.val, &pool);
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = rec.val_accuracy;
      result.best_epoch = epoch;
      result.best = model;
    }
  }
  return result;
}

}  // namespace srnn
