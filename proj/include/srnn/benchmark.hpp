// SPDX-License-Identifier: Apache-2.0
//
// Analytic speed ratio of the sliced network and a wall-clock harness that
// races a sequential GRU forward against the parallel sliced forward on the
// same cell and the same input batch.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace srnn {

/// t_sliced / t_sequential in recurrent-step units: 1/n^k + n*k/T.
/// Throws std::invalid_argument for n < 2 or T < 1.
double predict_ratio(std::size_t n, std::size_t k, std::size_t length);

struct BenchConfig {
  std::size_t length = 4096;  // T
  std::size_t slice_count = 8;
  std::size_t slice_times = 3;
  std::size_t hidden = 50;
  /// Input width of layer 0 and of the sequential arm; 0 means `hidden`.
  std::size_t embed = 0;
  std::size_t batch = 32;
  std::size_t workers = 1;
  std::size_t trials = 3;
  std::size_t warmup = 1;
  std::uint64_t seed = 1;
  /// A median below this triggers HarnessError.
  double min_seconds = 1e-4;
};

struct BenchReport {
  BenchConfig config;
  double predicted_ratio = 0.0;
  std::size_t steps_sequential = 0;
  std::size_t steps_sliced = 0;
  double seconds_sequential = 0.0;  // median
  double seconds_sliced = 0.0;      // median
  double speedup = 0.0;             // seconds_sequential / seconds_sliced
};

/// Validates the config (slicing divisibility, trials >= 3, warmup >= 1,
/// batch >= 1, workers >= 1); throws DivisibilityError or
/// std::invalid_argument.
void validate(const BenchConfig& cfg);

/// Checks that the sliced arm is bitwise identical with 1 and cfg.workers
/// workers (ConsistencyError otherwise), then times both arms. Throws
/// HarnessError when a median is below cfg.min_seconds.
BenchReport run_bench(const BenchConfig& cfg);

/// Tab-separated header plus one row per report, sorted by T ascending:
/// `T n k R_pred steps_rnn steps_srnn t_rnn t_srnn speedup`.
std::string emit_table(std::span<const BenchReport> reports);

/// One JSON object per line, same fields and order as emit_table.
std::string emit_jsonl(std::span<const BenchReport> reports);

}  // namespace srnn
