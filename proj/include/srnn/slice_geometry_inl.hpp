// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "srnn/errors.hpp"

namespace srnn {

template <typename T>
std::span<const T> min_subsequence(std::span<const T> tokens, const SlicePlan& plan,
                                   std::size_t i) {
  if (tokens.size() != plan.length) {
    throw DimensionError("min_subsequence: sequence of " + std::to_string(tokens.size()) +
                         " against plan length " + std::to_string(plan.length));
  }
  const IndexRange r = min_subsequence_range(plan, i);
  return tokens.subspan(r.begin, r.size());
}

}  // namespace srnn
