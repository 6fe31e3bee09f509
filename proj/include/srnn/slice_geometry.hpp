// SPDX-License-Identifier: Apache-2.0
//
// Slice plan for a sequence of length T sliced k times into n parts.
//
// Indexing is 0-based everywhere. Layer 0 holds the n^k minimum subsequences
// of length l0 = T / n^k; minimum subsequence i covers tokens
// [i*l0, (i+1)*l0). Layer p >= 1 holds n^(k-p) recurrences of length n, and
// recurrence j on layer p reads the last states of layer p-1 recurrences
// [j*n, (j+1)*n) in order. Layer k has exactly one recurrence whose last
// state is the sequence representation.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace srnn {

struct SliceConfig {
  std::size_t length = 0;       // T
  std::size_t slice_count = 2;  // n
  std::size_t slice_times = 0;  // k
};

struct LayerShape {
  std::size_t index = 0;     // p
  std::size_t count = 0;     // s_p, recurrences on this layer
  std::size_t length = 0;    // l_p, steps per recurrence
  bool operator==(const LayerShape&) const = default;
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const IndexRange&) const = default;
};

struct SlicePlan {
  std::size_t length = 0;
  std::size_t slice_count = 0;
  std::size_t slice_times = 0;
  std::size_t min_length = 0;  // l0
  std::vector<LayerShape> layers;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t min_count() const { return layers.front().count; }  // s0
  /// Longest chain of dependent recurrent steps: l0 + n*k.
  std::size_t critical_steps() const { return min_length + slice_count * slice_times; }
  /// Recurrent steps summed over every recurrence of every layer.
  std::size_t total_steps() const;

  bool operator==(const SlicePlan&) const = default;
};

/// n^k with overflow detection; throws DivisibilityError on overflow.
std::size_t slice_power(std::size_t n, std::size_t k);

/// Smallest multiple of n^k that is >= length.
std::size_t padded_length(std::size_t length, std::size_t n, std::size_t k);

/// Throws std::invalid_argument for n < 2 or T < 1, DivisibilityError when
/// n^k does not divide T.
SlicePlan build_plan(const SliceConfig& cfg);

/// Layer p-1 outputs feeding recurrence j of layer p.
IndexRange child_range(const SlicePlan& plan, std::size_t layer, std::size_t j);

/// Token range of minimum subsequence i.
IndexRange min_subsequence_range(const SlicePlan& plan, std::size_t i);

template <typename T>
std::span<const T> min_subsequence(std::span<const T> tokens, const SlicePlan& plan,
                                   std::size_t i);

}  // namespace srnn

#include "srnn/slice_geometry_inl.hpp"
