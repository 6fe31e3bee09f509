// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numeric>
#include <string>
#include <vector>

#include "srnn/errors.hpp"
#include "srnn/slice_geometry.hpp"

namespace srnn {

namespace {

// Brute force: literally split the sequence into n equal parts, k times, and
// measure what comes out. Layer p of the hierarchy sees the pieces produced by
// k - p splits; each piece of layer p >= 1 is made of n pieces one level down.
struct BruteForcePlan {
  std::vector<std::vector<int>> min_pieces;
  std::vector<LayerShape> layers;
};


std::vector<std::vector<int>> split_all(const std::vector<std::vector<int>>& pieces, std::size_t n) {
  std::vector<std::vector<int>> out;
  for (const auto& piece : pieces) {
    const std::size_t part = piece.size() / n;
    for (std::size_t i = 0; i < n; ++i) {
      out.emplace_back(piece.begin() + static_cast<std::ptrdiff_t>(i * part),
                       piece.begin() + static_cast<std::ptrdiff_t>((i + 1) * part));
    }
  }
  return out;
}

BruteForcePlan brute_force(std::size_t T, std::size_t n, std::size_t k) {
  std::vector<int> seq(T);
  std::iota(seq.begin(), seq.end(), 0);
  std::vector<std::vector<std::vector<int>>> levels{{seq}};
  for (std::size_t s = 0; s < k; ++s) levels.push_back(split_all(levels.back(), n));
  BruteForcePlan out;
  out.min_pieces = levels.back();
  // Layer 0: the smallest pieces, walked token by token.
  out.layers.push_back({0, out.min_pieces.size(), out.min_pieces.front().size()});
  // Layer p: one recurrence per piece of level k - p, stepping over its n children.
  for (std::size_t p = 1; p <= k; ++p) {
    out.layers.push_back({p, levels[k - p].size(), n});
  }
  return out;
}

TEST(BuildPlan, MatchesRecursiveSplittingOracle) {
  for (std::size_t n = 2; n <= 5; ++n)
    for (std::size_t k = 0; k <= 4; ++k)
      for (std::size_t l0 = 1; l0 <= 4; ++l0) {
        const std::size_t T = l0 * slice_power(n, k);
        const SlicePlan plan = build_plan({T, n, k});
        const BruteForcePlan oracle = brute_force(T, n, k);
        ASSERT_EQ(plan.layers, oracle.layers) << "T=" << T << " n=" << n << " k=" << k;
        EXPECT_EQ(plan.min_length, l0);
        EXPECT_EQ(plan.min_count(), oracle.min_pieces.size());
        std::vector<int> tokens(T);
        std::iota(tokens.begin(), tokens.end(), 0);
        for (std::size_t i = 0; i < plan.min_count(); ++i) {
          const auto got = min_subsequence(std::span<const int>(tokens), plan, i);
          ASSERT_EQ(std::vector<int>(got.begin(), got.end()), oracle.min_pieces[i]);
        }
      }
}

TEST(BuildPlan, FourMinimumSubsequencesOfLengthTwo) {
  const SlicePlan plan = build_plan({8, 2, 2});
  EXPECT_EQ(plan.min_length, 2u);
  EXPECT_EQ(plan.min_count(), 4u);
  const std::vector<LayerShape> expected{{0, 4, 2}, {1, 2, 2}, {2, 1, 2}};
  EXPECT_EQ(plan.layers, expected);
}

TEST(BuildPlan, LengthFiveTwelveWithSixteenSlices) {
  const SlicePlan plan = build_plan({512, 16, 1});
  EXPECT_EQ(plan.min_length, 32u);
  EXPECT_EQ(plan.min_count(), 16u);
}

TEST(BuildPlan, NoSlicingIsOneLayer) {
  const SlicePlan plan = build_plan({8, 2, 0});
  ASSERT_EQ(plan.layer_count(), 1u);
  EXPECT_EQ(plan.layers[0], (LayerShape{0, 1, 8}));
  EXPECT_EQ(plan.critical_steps(), 8u);
}

TEST(BuildPlan, StructuralInvariants) {
  for (std::size_t n = 2; n <= 6; ++n)
    for (std::size_t k = 0; k <= 4; ++k) {
      const std::size_t T = 3 * slice_power(n, k);
      const SlicePlan plan = build_plan({T, n, k});
      ASSERT_EQ(plan.layer_count(), k + 1);
      EXPECT_EQ(plan.layers[0].count * plan.layers[0].length, T);
      EXPECT_EQ(plan.layers.back().count, 1u);
      for (std::size_t p = 1; p <= k; ++p) {
        EXPECT_EQ(plan.layers[p].length, n);
        EXPECT_EQ(plan.layers[p].count, slice_power(n, k - p));
        EXPECT_EQ(plan.layers[p].count * plan.layers[p].length, plan.layers[p - 1].count);
      }
      EXPECT_EQ(plan.critical_steps(), 3 + n * k);
    }
}

TEST(BuildPlan, DivisibilityErrorNamesNearestPaddedLength) {
  try {
    build_plan({64, 3, 2});
    FAIL() << "expected DivisibilityError";
  } catch (const DivisibilityError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("64"), std::string::npos);
    EXPECT_NE(what.find("72"), std::string::npos);
  }
  EXPECT_EQ(padded_length(64, 3, 2), 72u);
  EXPECT_EQ(padded_length(72, 3, 2), 72u);
}

TEST(BuildPlan, RejectsDegenerateArguments) {
  EXPECT_THROW(build_plan({8, 1, 1}), std::invalid_argument);
  EXPECT_THROW(build_plan({0, 2, 1}), std::invalid_argument);
  EXPECT_THROW(slice_power(1000, 20), DivisibilityError);
}

TEST(ChildRange, ContiguousChildren) {
  const SlicePlan plan = build_plan({8, 2, 2});
  EXPECT_EQ(child_range(plan, 1, 0), (IndexRange{0, 2}));
  EXPECT_EQ(child_range(plan, 1, 1), (IndexRange{2, 4}));
  EXPECT_EQ(child_range(plan, 2, 0), (IndexRange{0, 2}));
}

TEST(ChildRange, PartitionsTheLayerBelow) {
  for (std::size_t n = 2; n <= 4; ++n) {
    const SlicePlan plan = build_plan({2 * slice_power(n, 3), n, 3});
    for (std::size_t p = 1; p < plan.layer_count(); ++p) {
      std::vector<int> covered(plan.layers[p - 1].count, 0);
      for (std::size_t j = 0; j < plan.layers[p].count; ++j) {
        const IndexRange r = child_range(plan, p, j);
        for (std::size_t c = r.begin; c < r.end; ++c) covered[c] += 1;
      }
      for (int c : covered) EXPECT_EQ(c, 1);
    }
  }
}

TEST(ChildRange, OutOfRangeThrows) {
  const SlicePlan plan = build_plan({8, 2, 2});
  EXPECT_THROW(child_range(plan, 0, 0), IndexError);
  EXPECT_THROW(child_range(plan, 3, 0), IndexError);
  EXPECT_THROW(child_range(plan, 1, 2), IndexError);
}

TEST(MinSubsequence, SecondSliceOfEight) {
  const SlicePlan plan = build_plan({8, 2, 2});
  const std::vector<int> tokens{10, 11, 12, 13, 14, 15, 16, 17};
  const auto s = min_subsequence(std::span<const int>(tokens), plan, 1);
  EXPECT_EQ(std::vector<int>(s.begin(), s.end()), (std::vector<int>{12, 13}));
  const auto first = min_subsequence(std::span<const int>(tokens), plan, 0);
  EXPECT_EQ(std::vector<int>(first.begin(), first.end()), (std::vector<int>{10, 11}));
}

TEST(MinSubsequence, ConcatenationReproducesInput) {
  const SlicePlan plan = build_plan({81, 3, 3});
  std::vector<int> tokens(81);
  std::iota(tokens.begin(), tokens.end(), 100);
  std::vector<int> joined;
  for (std::size_t i = 0; i < plan.min_count(); ++i) {
    const auto s = min_subsequence(std::span<const int>(tokens), plan, i);
    joined.insert(joined.end(), s.begin(), s.end());
  }
  EXPECT_EQ(joined, tokens);
}

TEST(MinSubsequence, LengthMismatchAndIndexErrors) {
  const SlicePlan plan = build_plan({8, 2, 2});
  const std::vector<int> seven(7);
  EXPECT_THROW(min_subsequence(std::span<const int>(seven), plan, 0), DimensionError);
  EXPECT_THROW(min_subsequence_range(plan, 4), IndexError);
}

}  // namespace
}  // namespace srnn
