// SPDX-License-Identifier: Apache-2.0
#include "srnn/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "srnn/errors.hpp"
#include "srnn/recurrent_cells.hpp"
#include "srnn/rng.hpp"
#include "srnn/slice_geometry.hpp"
#include "srnn/srnn_engine.hpp"
#include "srnn/thread_pool.hpp"

namespace srnn {

namespace {

template <typename F>
double median_seconds(std::size_t warmup, std::size_t trials, F&& run) {
  for (std::size_t i = 0; i < warmup; ++i) run();
  std::vector<double> times;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto start = std::chrono::steady_clock::now();
    run();
    times.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  return times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
}

std::vector<BenchReport> sorted_by_length(std::span<const BenchReport> reports) {
  std::vector<BenchReport> rows(reports.begin(), reports.end());
  std::stable_sort(rows.begin(), rows.end(), [](const BenchReport& a, const BenchReport& b) {
    return a.config.length < b.config.length;
  });
  return rows;
}

}  // namespace

double predict_ratio(std::size_t n, std::size_t k, std::size_t length) {
  if (n < 2) throw std::invalid_argument("predict_ratio: n must be >= 2");
  if (length < 1) throw std::invalid_argument("predict_ratio: T must be >= 1");
  const double nk = std::pow(static_cast<double>(n), static_cast<double>(k));
  return 1.0 / nk + static_cast<double>(n * k) / static_cast<double>(length);
}

void validate(const BenchConfig& cfg) {
  build_plan({cfg.length, cfg.slice_count, cfg.slice_times});
  if (cfg.trials < 3) throw std::invalid_argument("bench: trials must be >= 3");
  if (cfg.warmup < 1) throw std::invalid_argument("bench: warmup must be >= 1");
  if (cfg.batch < 1) throw std::invalid_argument("bench: batch must be >= 1");
  if (cfg.workers < 1) throw std::invalid_argument("bench: workers must be >= 1");
  if (cfg.hidden < 1) throw std::invalid_argument("bench: hidden must be >= 1");
}

BenchReport run_bench(const BenchConfig& cfg) {
  validate(cfg);
  const SlicePlan plan = build_plan({cfg.length, cfg.slice_count, cfg.slice_times});
  const std::size_t m = cfg.hidden;
  const std::size_t e = cfg.embed == 0 ? m : cfg.embed;

  SeededRng rng(cfg.seed);
  // The sequential arm runs cells[0]; upper layers of the sliced arm need an
  // m -> m cell, which is cells[0] itself when e == m.
  std::vector<GruParams> cells{GruParams::random(e, m, rng)};
  for (std::size_t p = 1; p < plan.layer_count(); ++p) {
    cells.push_back(e == m ? cells.front() : GruParams::random(m, m, rng));
  }
  Matrix inputs(cfg.batch * cfg.length, e);
  for (double& x : inputs.data()) x = rng.uniform(-1.0, 1.0);

  ThreadPool pool(cfg.workers);
  const BatchForward reference = sliced_forward_batch(cells, plan, inputs, cfg.batch, nullptr);
  const BatchForward parallel = sliced_forward_batch(cells, plan, inputs, cfg.batch, &pool);
  if (!(reference.features == parallel.features)) {
    throw ConsistencyError("bench: sliced forward differs between 1 and " +
                           std::to_string(cfg.workers) + " workers");
  }

  BenchReport r;
  r.config = cfg;
  r.predicted_ratio = predict_ratio(cfg.slice_count, cfg.slice_times, cfg.length);
  r.steps_sequential = cfg.length;
  r.steps_sliced = parallel.critical_steps;

  Matrix sink;
  r.seconds_sequential = median_seconds(cfg.warmup, cfg.trials, [&] {
    sink = layer_forward_parallel(cells.front(), inputs, cfg.length, nullptr);
  });
  r.seconds_sliced = median_seconds(cfg.warmup, cfg.trials, [&] {
    sink = sliced_forward_batch(cells, plan, inputs, cfg.batch, &pool).features;
  });
  if (r.seconds_sequential < cfg.min_seconds || r.seconds_sliced < cfg.min_seconds) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "bench: median time %.3g s is below the %.3g s timer floor; "
                  "increase --batch or --T",
                  std::min(r.seconds_sequential, r.seconds_sliced), cfg.min_seconds);
    throw HarnessError(buf);
  }
  r.speedup = r.seconds_sequential / r.seconds_sliced;
  return r;
}

std::string emit_table(std::span<const BenchReport> reports) {
  if (reports.empty()) throw std::invalid_argument("emit_table: no reports");
  std::string out = "T\tn\tk\tR_pred\tsteps_rnn\tsteps_srnn\tt_rnn\tt_srnn\tspeedup\n";
  char buf[256];
  for (const BenchReport& r : sorted_by_length(reports)) {
    std::snprintf(buf, sizeof buf, "%zu\t%zu\t%zu\t%.10g\t%zu\t%zu\t%.6f\t%.6f\t%.2f\n",
                  r.config.length, r.config.slice_count, r.config.slice_times, r.predicted_ratio,
                  r.steps_sequential, r.steps_sliced, r.seconds_sequential, r.seconds_sliced,
                  r.speedup);
    out += buf;
  }
  return out;
}

std::string emit_jsonl(std::span<const BenchReport> reports) {
  std::string out;
  for (const BenchReport& r : sorted_by_length(reports)) {
    nlohmann::ordered_json j;
    j["T"] = r.config.length;
    j["n"] = r.config.slice_count;
    j["k"] = r.config.slice_times;
    j["R_pred"] = r.predicted_ratio;
    j["steps_rnn"] = r.steps_sequential;
    j["steps_srnn"] = r.steps_sliced;
    j["t_rnn"] = r.seconds_sequential;
    j["t_srnn"] = r.seconds_sliced;
    j["speedup"] = r.speedup;
    j["workers"] = r.config.workers;
    j["batch"] = r.config.batch;
    j["hidden"] = r.config.hidden;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace srnn
