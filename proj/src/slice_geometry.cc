// SPDX-License-Identifier: Apache-2.0
#include "srnn/slice_geometry.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "srnn/errors.hpp"

namespace srnn {

std::size_t slice_power(std::size_t n, std::size_t k) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < k; ++i) {
    if (out > std::numeric_limits<std::size_t>::max() / n) {
      throw DivisibilityError("slice_power: " + std::to_string(n) + "^" + std::to_string(k) +
                              " overflows");
    }
    out *= n;
  }
  return out;
}

std::size_t padded_length(std::size_t length, std::size_t n, std::size_t k) {
  const std::size_t unit = slice_power(n, k);
  if (length == 0) return unit;
  return (length + unit - 1) / unit * unit;
}

std::size_t SlicePlan::total_steps() const {
  std::size_t total = 0;
  for (const auto& layer : layers) total += layer.count * layer.length;
  return total;
}

SlicePlan build_plan(const SliceConfig& cfg) {
  const std::size_t n = cfg.slice_count;
  const std::size_t k = cfg.slice_times;
  const std::size_t T = cfg.length;
  if (n < 2) throw std::invalid_argument("slice plan: n must be >= 2, got " + std::to_string(n));
  if (T < 1) throw std::invalid_argument("slice plan: T must be >= 1");
  const std::size_t leaves = slice_power(n, k);
  if (T % leaves != 0) {
    throw DivisibilityError("slice plan: n^k = " + std::to_string(n) + "^" + std::to_string(k) +
                            " = " + std::to_string(leaves) + " does not divide T = " +
                            std::to_string(T) + "; nearest valid padded length is " +
                            std::to_string(padded_length(T, n, k)));
  }

  SlicePlan plan;
  plan.length = T;
  plan.slice_count = n;
  plan.slice_times = k;
  plan.min_length = T / leaves;
  plan.layers.push_back({0, leaves, plan.min_length});
  std::size_t count = leaves;
  for (std::size_t p = 1; p <= k; ++p) {
    count /= n;
    plan.layers.push_back({p, count, n});
  }
  return plan;
}

IndexRange child_range(const SlicePlan& plan, std::size_t layer, std::size_t j) {
  if (layer == 0 || layer >= plan.layers.size()) {
    throw IndexError("child_range: layer " + std::to_string(layer) + " outside [1, " +
                     std::to_string(plan.layers.size()) + ")");
  }
  if (j >= plan.layers[layer].count) {
    throw IndexError("child_range: recurrence " + std::to_string(j) + " outside layer " +
                     std::to_string(layer) + " of " + std::to_string(plan.layers[layer].count));
  }
  const std::size_t n = plan.slice_count;
  return {j * n, (j + 1) * n};
}

IndexRange min_subsequence_range(const SlicePlan& plan, std::size_t i) {
  if (i >= plan.min_count()) {
    throw IndexError("min_subsequence: index " + std::to_string(i) + " outside " +
                     std::to_string(plan.min_count()) + " minimum subsequences");
  }
  return {i * plan.min_length, (i + 1) * plan.min_length};
}

}  // namespace srnn
