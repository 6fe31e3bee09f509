// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <tuple>

#include "srnn/errors.hpp"
#include "srnn/recurrent_cells.hpp"
#include "test_util.hpp"

namespace srnn {
namespace {

using testing::central_difference;
using testing::random_vector;
using testing::scalar_rel;

constexpr double kStep = 1e-6;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Independent scalar-loop evaluation of the gated update.
Vector reference_gru(const GruParams& p, const Vector& x, const Vector& h) {
  const std::size_t m = p.hidden_dim;
  auto affine = [&](const Matrix& w, const Matrix& u, const Vector& b, const Vector& hv,
                    std::size_t i) {
    double s = b[i];
    for (std::size_t j = 0; j < x.size(); ++j) s += w(i, j) * x[j];
    for (std::size_t j = 0; j < m; ++j) s += u(i, j) * hv[j];
    return s;
  };
  Vector r(m), z(m), rh(m), out(m);
  for (std::size_t i = 0; i < m; ++i) {
    r[i] = 1.0 / (1.0 + std::exp(-affine(p.input_reset, p.recurrent_reset, p.bias_reset, h, i)));
    z[i] =
        1.0 / (1.0 + std::exp(-affine(p.input_update, p.recurrent_update, p.bias_update, h, i)));
    rh[i] = r[i] * h[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double c =
        std::tanh(affine(p.input_candidate, p.recurrent_candidate, p.bias_candidate, rh, i));
    out[i] = z[i] * h[i] + (1.0 - z[i]) * c;
  }
  return out;
}

TEST(GruStep, ZeroParametersGiveHalfGatesAndZeroState) {
  const GruParams p = GruParams::zeros(3, 4);
  const GruStep s = gru_step(p, Vector{1.0, -2.0, 3.0}, Vector(4, 0.0));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(s.cache.reset[i], 0.5);
    EXPECT_EQ(s.cache.update[i], 0.5);
    EXPECT_EQ(s.cache.candidate[i], 0.0);
    EXPECT_EQ(s.h[i], 0.0);
  }
}

TEST(GruStep, MatchesScalarReference) {
  SeededRng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const GruParams p = GruParams::random(3, 4, rng);
    GruParams q = p;
    for (auto block : q.blocks())
      for (double& v : block) v = rng.uniform(-1, 1);
    const Vector x = random_vector(3, rng);
    const Vector h = random_vector(4, rng, 0.9);
    const Vector got = gru_step(q, x, h).h;
    const Vector want = reference_gru(q, x, h);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(got[i], want[i], 1e-14);
  }
}

TEST(GruStep, UpdateGateOneCopiesPreviousState) {
  SeededRng rng(2);
  const GruParams p = GruParams::random(3, 4, rng);
  const Vector h = random_vector(4, rng, 0.9);
  const GruStep s = gru_step(p, random_vector(3, rng), h, {.reset = std::nullopt, .update = 1.0});
  EXPECT_EQ(s.h, h);
}

TEST(GruStep, ResetGateZeroIgnoresPreviousState) {
  SeededRng rng(3);
  const GruParams p = GruParams::random(3, 4, rng);
  const Vector x = random_vector(3, rng);
  const GruStep a = gru_step(p, x, random_vector(4, rng, 0.9), {.reset = 0.0, .update = {}});
  const GruStep b = gru_step(p, x, random_vector(4, rng, 0.9), {.reset = 0.0, .update = {}});
  EXPECT_EQ(a.cache.candidate, b.cache.candidate);
  const Vector wx = matvec(p.input_candidate, x);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(a.cache.candidate[i], std::tanh(wx[i] + p.bias_candidate[i]), 1e-15);
  }
}

TEST(GruStep, RejectsWrongShapes) {
  const GruParams p = GruParams::zeros(3, 4);
  EXPECT_THROW(gru_step(p, Vector(2), Vector(4)), DimensionError);
  EXPECT_THROW(gru_step(p, Vector(3), Vector(5)), DimensionError);
  GruParams broken = p;
  broken.recurrent_update = Matrix(4, 3);
  EXPECT_THROW(broken.validate(), DimensionError);
}

TEST(GruStep, BoundedFromZeroState) {
  SeededRng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    GruParams p = GruParams::random(2, 5, rng);
    for (auto block : p.blocks())
      for (double& v : block) v = rng.uniform(-5, 5);
    Vector h(5, 0.0);
    for (int t = 0; t < 100; ++t) {
      h = gru_step(p, random_vector(2, rng, 10.0), h).h;
      for (double v : h) {
        ASSERT_GE(v, -1.0);
        ASSERT_LE(v, 1.0);
      }
    }
  }
}

TEST(GruBackward, ZeroUpstreamGivesZeroGradients) {
  SeededRng rng(4);
  const GruParams p = GruParams::random(3, 4, rng);
  const GruStep s = gru_step(p, random_vector(3, rng), random_vector(4, rng));
  const GruStepGradients g = gru_step_backward(p, s.cache, Vector(4, 0.0));
  for (double v : g.dx) EXPECT_EQ(v, 0.0);
  for (double v : g.dh_prev) EXPECT_EQ(v, 0.0);
  for (auto block : g.dparams.blocks())
    for (double v : block) EXPECT_EQ(v, 0.0);
}

// Checks every coordinate of dx, dh_prev and the nine blocks against central
// differences of L = <c, h'>. Returns the largest relative error seen.
double check_cell_gradients(GruParams p, Vector x, Vector h, const Vector& c,
                            const GateClamp& clamp = {}) {
  const GruStep s = gru_step(p, x, h, clamp);
  const GruStepGradients g = gru_step_backward(p, s.cache, c);
  auto loss = [&] { return dot(c, gru_step(p, x, h, clamp).h); };
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, scalar_rel(g.dx[i], central_difference(&x[i], kStep, loss)));
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    worst = std::max(worst, scalar_rel(g.dh_prev[i], central_difference(&h[i], kStep, loss)));
  }
  auto blocks = p.blocks();
  auto grads = g.dparams.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      worst = std::max(worst,
                       scalar_rel(grads[b][i], central_difference(&blocks[b][i], kStep, loss)));
    }
  }
  return worst;
}

class GruGradientCheck : public ::testing::TestWithParam<std::tuple<std::size_t, std::size_t>> {};

TEST_P(GruGradientCheck, MatchesCentralDifferences) {
  const auto [d, m] = GetParam();
  SeededRng rng(1000 + d * 10 + m);
  for (int draw = 0; draw < 20; ++draw) {
    GruParams p = GruParams::random(d, m, rng);
    for (auto block : p.blocks())
      for (double& v : block) v = rng.uniform(-1, 1);
    const double worst = check_cell_gradients(p, random_vector(d, rng), random_vector(m, rng),
                                              random_vector(m, rng));
    EXPECT_LE(worst, 1e-5) << "draw " << draw;
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, GruGradientCheck,
                         ::testing::Values(std::make_tuple(1, 1), std::make_tuple(3, 4),
                                           std::make_tuple(5, 5)));

TEST(GruBackward, ClampedUpdatePassesGradientStraightThrough) {
  SeededRng rng(6);
  GruParams p = GruParams::random(3, 4, rng);
  const Vector x = random_vector(3, rng);
  const Vector h = random_vector(4, rng);
  const Vector c = random_vector(4, rng);
  const GateClamp clamp{.reset = std::nullopt, .update = 1.0};
  const GruStep s = gru_step(p, x, h, clamp);
  const GruStepGradients g = gru_step_backward(p, s.cache, c);
  EXPECT_EQ(g.dh_prev, c);
  for (auto block : g.dparams.blocks())
    for (double v : block) EXPECT_EQ(v, 0.0);
  EXPECT_LE(check_cell_gradients(p, x, h, c, clamp), 1e-5);
}

TEST(GruBackward, ClampedResetMatchesCentralDifferences) {
  SeededRng rng(7);
  const GruParams p = GruParams::random(3, 4, rng);
  EXPECT_LE(check_cell_gradients(p, random_vector(3, rng), random_vector(4, rng),
                                 random_vector(4, rng), {.reset = 0.0, .update = {}}),
            1e-5);
}

TEST(GruBackward, AccumulateAddsIntoExistingBuffers) {
  SeededRng rng(8);
  const GruParams p = GruParams::random(2, 3, rng);
  const GruStep s = gru_step(p, random_vector(2, rng), random_vector(3, rng));
  const Vector dh = random_vector(3, rng);
  const GruStepGradients once = gru_step_backward(p, s.cache, dh);
  GruParams acc = GruParams::zeros(2, 3);
  Vector dx(2), dh_prev(3);
  gru_step_backward_accumulate(p, s.cache, dh, acc, dx, dh_prev);
  gru_step_backward_accumulate(p, s.cache, dh, acc, dx, dh_prev);
  auto a = acc.blocks();
  auto o = once.dparams.blocks();
  for (std::size_t b = 0; b < a.size(); ++b)
    for (std::size_t i = 0; i < a[b].size(); ++i) EXPECT_EQ(a[b][i], o[b][i] + o[b][i]);
}

TEST(GruParams, RandomInitRangeAndZeroBias) {
  SeededRng rng(5);
  const GruParams p = GruParams::random(4, 9, rng);
  const double s_in = 1.0 / std::sqrt(4.0);
  const double s_rec = 1.0 / std::sqrt(9.0);
  for (double v : p.input_reset.data()) EXPECT_LE(std::abs(v), s_in);
  for (double v : p.recurrent_candidate.data()) EXPECT_LE(std::abs(v), s_rec);
  for (double v : p.bias_update) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(p.parameter_count(), 3 * (9 * 4 + 9 * 9 + 9));
}

TEST(LinearStep, ZeroRecurrenceIsInputProjection) {
  SeededRng rng(1);
  LinearRnnParams p = LinearRnnParams::zeros(3, 2);
  p.input = testing::random_matrix(2, 3, rng);
  const Vector x = random_vector(3, rng);
  EXPECT_EQ(linear_step(p, x, random_vector(2, rng)), matvec(p.input, x));
}

TEST(LinearStep, ZeroInputAndStateGiveBias) {
  LinearRnnParams p = LinearRnnParams::zeros(3, 2);
  p.bias = {0.25, -4.0};
  EXPECT_EQ(linear_step(p, Vector(3, 0.0), Vector(2, 0.0)), p.bias);
}

TEST(LinearStep, ScalarFoldGivesFifteen) {
  LinearRnnParams p{Matrix(1, 1, 1.0), Matrix(1, 1, 2.0), Vector{0.0}};
  Vector h{0.0};
  for (int t = 0; t < 4; ++t) h = linear_step(p, Vector{1.0}, h);
  EXPECT_EQ(h[0], 15.0);
}

TEST(LinearStep, FoldMatchesPowerSeries) {
  SeededRng rng(44);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 1 + rng.below(4);
    const std::size_t d = 1 + rng.below(4);
    const std::size_t steps = 2 + rng.below(20);
    LinearRnnParams p = LinearRnnParams::zeros(d, m);
    p.input = testing::random_matrix(m, d, rng, 0.9);
    p.recurrent = testing::random_matrix(m, m, rng, 0.9 / static_cast<double>(m));
    std::vector<Vector> xs;
    for (std::size_t t = 0; t < steps; ++t) xs.push_back(random_vector(d, rng, 0.9));
    Vector h(m, 0.0);
    for (const auto& x : xs) h = linear_step(p, x, h);
    Vector closed(m, 0.0);
    for (std::size_t i = 0; i < steps; ++i) {
      add_into(closed, matvec(matrix_power(p.recurrent, steps - 1 - i), matvec(p.input, xs[i])));
    }
    EXPECT_LE(relative_error(h, closed), 1e-10);
  }
}

TEST(LinearStep, RejectsWrongShapes) {
  const LinearRnnParams p = LinearRnnParams::zeros(3, 2);
  EXPECT_THROW(linear_step(p, Vector(2), Vector(2)), DimensionError);
  EXPECT_THROW(linear_step(p, Vector(3), Vector(3)), DimensionError);
}

}  // namespace
}  // namespace srnn
