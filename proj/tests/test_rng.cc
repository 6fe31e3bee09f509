// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "srnn/rng.hpp"
#include "srnn/thread_pool.hpp"

namespace srnn {
namespace {

TEST(SeededRng, EqualSeedsGiveEqualStreams) {
  SeededRng a(42);
  SeededRng b(42);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(SeededRng, DifferentSeedsDiverge) {
  SeededRng a(1);
  SeededRng b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next_u64() == b.next_u64();
  EXPECT_EQ(equal, 0);
}

// Portable test vector: splitmix64 seeding followed by xoshiro256**.
TEST(SeededRng, KnownFirstDraws) {
  auto splitmix = [](std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  std::uint64_t seed = 7;
  std::uint64_t s[4];
  for (auto& w : s) w = splitmix(seed);
  SeededRng rng(7);
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t expected = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    EXPECT_EQ(rng.next_u64(), expected);
  }
}

TEST(SeededRng, UniformRanges) {
  SeededRng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double v = rng.uniform(-0.05, 0.05);
    EXPECT_GE(v, -0.05);
    EXPECT_LT(v, 0.05);
    EXPECT_LT(rng.below(7), 7u);
  }
}

TEST(SeededRng, ShuffleIsAPermutationAndReproducible) {
  std::vector<int> a(50);
  std::iota(a.begin(), a.end(), 0);
  std::vector<int> b = a;
  SeededRng r1(9);
  SeededRng r2(9);
  r1.shuffle(std::span<int>(a));
  r2.shuffle(std::span<int>(b));
  EXPECT_EQ(a, b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(SeededRng, DerivedStreamsAreIndependentOfParentUse) {
  SeededRng a = SeededRng::derive(5, 1);
  SeededRng b = SeededRng::derive(5, 1);
  SeededRng c = SeededRng::derive(5, 2);
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
}

TEST(ThreadPool, ParallelForVisitsEveryIndexOnce) {
  for (std::size_t workers : {1u, 2u, 8u}) {
    ThreadPool pool(workers);
    std::vector<int> hits(1000, 0);
    pool.parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(ThreadPool, PropagatesExceptions) {
  ThreadPool pool(4);
  EXPECT_THROW(pool.parallel_for(100,
                                 [](std::size_t i) {
                                   if (i == 77) throw std::runtime_error("boom");
                                 }),
               std::runtime_error);
  // The pool is still usable afterwards.
  int sum = 0;
  std::mutex m;
  pool.parallel_for(10, [&](std::size_t i) {
    std::lock_guard lock(m);
    sum += static_cast<int>(i);
  });
  EXPECT_EQ(sum, 45);
}

TEST(ThreadPool, NullPoolRunsSerially) {
  std::vector<std::size_t> order;
  parallel_for(nullptr, 5, [&](std::size_t i) { order.push_back(i); });
  EXPECT_EQ(order, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

}  // namespace
}  // namespace srnn
