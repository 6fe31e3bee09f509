// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <tuple>

#include "srnn/equivalence.hpp"
#include "srnn/errors.hpp"
#include "srnn/srnn_engine.hpp"
#include "test_util.hpp"

namespace srnn {
namespace {

using testing::random_matrix;

TEST(ClosedForm, ZeroRecurrenceIsLastInputProjection) {
  SeededRng rng(1);
  EquivalenceCase c = random_case(2, 1, 3, rng);
  c.recurrent_weight = Matrix(3, 3);
  const Vector expected = matvec(c.input_weight, c.inputs.back());
  EXPECT_EQ(expand_closed_form(c), expected);
  const EquivalenceReport r = verify_equivalence(c, 0.0);
  EXPECT_EQ(r.sequential, expected);
  EXPECT_EQ(r.sliced, expected);
  EXPECT_TRUE(r.pass);
}

TEST(ClosedForm, ScalarSumIsFifteen) {
  EXPECT_EQ(expand_closed_form(scalar_demo_case()), Vector{15.0});
}

TEST(ClosedForm, AgreesWithSequentialFold) {
  SeededRng rng(2);
  for (int i = 0; i < 20; ++i) {
    const EquivalenceCase c = random_case(2 + rng.below(3), 1 + rng.below(2), 1 + rng.below(5), rng);
    EXPECT_LE(relative_error(expand_closed_form(c), sequential_linear(c)), 1e-10);
  }
}

TEST(Construction, TwoLayersGetWAndWSquared) {
  SeededRng rng(3);
  const EquivalenceCase c = random_case(2, 1, 3, rng);
  const auto cells = construct_equivalent_srnn(c);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].input, c.input_weight);
  EXPECT_EQ(cells[0].recurrent, c.recurrent_weight);
  EXPECT_EQ(cells[1].input, Matrix::identity(3));
  EXPECT_EQ(cells[1].recurrent, matmul(c.recurrent_weight, c.recurrent_weight));
  for (const auto& cell : cells)
    for (double b : cell.bias) EXPECT_EQ(b, 0.0);
}

TEST(Construction, IdentityRecurrenceStaysIdentity) {
  SeededRng rng(4);
  EquivalenceCase c = random_case(3, 2, 2, rng);
  c.recurrent_weight = Matrix::identity(2);
  for (const auto& cell : construct_equivalent_srnn(c)) EXPECT_EQ(cell.recurrent, Matrix::identity(2));
}

TEST(Construction, PowersFollowSliceCount) {
  SeededRng rng(5);
  const EquivalenceCase c = random_case(3, 2, 2, rng);
  const auto cells = construct_equivalent_srnn(c);
  ASSERT_EQ(cells.size(), 3u);
  const Matrix& w = c.recurrent_weight;
  const Matrix w3 = matmul(matmul(w, w), w);
  const Matrix w9 = matmul(matmul(w3, w3), w3);
  EXPECT_LE(relative_error(cells[1].recurrent.data(), w3.data()), 1e-15);
  EXPECT_LE(relative_error(cells[2].recurrent.data(), w9.data()), 1e-15);
  EXPECT_TRUE(verify_equivalence(c, 1e-9).pass);
}

TEST(Construction, NonSquareRecurrenceRejected) {
  SeededRng rng(6);
  EquivalenceCase c = random_case(2, 1, 2, rng);
  c.recurrent_weight = Matrix(2, 3);
  EXPECT_THROW(construct_equivalent_srnn(c), DimensionError);
  EXPECT_THROW(make_case(2, 1, Matrix(2, 2), Matrix(2, 3), std::vector<Vector>(4, Vector(2))),
               DimensionError);
}

TEST(MakeCase, LengthMustBeNToTheKPlusOne) {
  EXPECT_THROW(make_case(2, 1, Matrix(1, 1), Matrix(1, 1), std::vector<Vector>(8, Vector(1))),
               DivisibilityError);
  EXPECT_THROW(make_case(2, 0, Matrix(1, 1), Matrix(1, 1), std::vector<Vector>(2, Vector(1))),
               std::invalid_argument);
  EXPECT_THROW(make_case(2, 1, Matrix(1, 2), Matrix(1, 1), std::vector<Vector>(4, Vector(1))),
               DimensionError);
}

TEST(Verify, ScalarDemoByHand) {
  const EquivalenceReport r = verify_equivalence(scalar_demo_case(), 0.0);
  ASSERT_EQ(r.layer0_states.size(), 2u);
  EXPECT_EQ(r.layer0_states[0], Vector{3.0});
  EXPECT_EQ(r.layer0_states[1], Vector{3.0});
  // Top layer: 3 first, then 4 * 3 + 3.
  EXPECT_EQ(r.sliced, Vector{15.0});
  EXPECT_EQ(r.sequential, Vector{15.0});
  EXPECT_EQ(r.closed_form, Vector{15.0});
  EXPECT_EQ(r.max_error, 0.0);
}

TEST(Verify, DefaultSuiteWithinTolerance) {
  const auto start = std::chrono::steady_clock::now();
  const auto suite = default_suite(50, 2024);
  ASSERT_EQ(suite.size(), 50u);
  for (const auto& c : suite) {
    EXPECT_EQ(c.length, slice_power(c.slice_count, c.slice_times + 1));
    const EquivalenceReport r = verify_equivalence(c, 1e-9);
    EXPECT_TRUE(r.pass) << format_report(c, r);
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 10.0);
}

TEST(Verify, SuiteCoversShapesAndDims) {
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (const auto& c : default_suite(50, 1)) seen.insert({c.slice_count, c.slice_times, c.hidden_dim()});
  EXPECT_EQ(seen.size(), 15u);
}

// Layer-0 last states are short power series over each block of n inputs.
TEST(Verify, LayerZeroStatesAreBlockExpansions) {
  SeededRng rng(7);
  for (int i = 0; i < 10; ++i) {
    const EquivalenceCase c = random_case(2 + rng.below(3), 1 + rng.below(2), 3, rng);
    const EquivalenceReport r = verify_equivalence(c, 1e-9);
    const std::size_t l0 = c.length / slice_power(c.slice_count, c.slice_times);
    ASSERT_EQ(r.layer0_states.size(), c.length / l0);
    for (std::size_t j = 0; j < r.layer0_states.size(); ++j) {
      Vector expected(3, 0.0);
      for (std::size_t t = 0; t < l0; ++t) {
        add_into(expected, matvec(matrix_power(c.recurrent_weight, l0 - 1 - t),
                                  matvec(c.input_weight, c.inputs[j * l0 + t])));
      }
      EXPECT_LE(relative_error(r.layer0_states[j], expected), 1e-10);
    }
  }
}

TEST(Verify, PerturbationBreaksEquivalence) {
  std::size_t observable = 0;
  std::size_t total = 0;
  for (const auto& c : default_suite(50, 99)) {
    for (std::size_t layer = 0; layer <= c.slice_times; ++layer) {
      const EquivalenceReport r = verify_equivalence(c, 1e-9, Perturbation{layer, 0, 0, 1e-3});
      EXPECT_FALSE(r.pass) << format_report(c, r) << " layer " << layer;
      ++total;
      if (perturbation_sensitivity(c, layer, 0, 0) < 1e-2) continue;
      ++observable;
      EXPECT_GT(r.max_error, 1e-6) << format_report(c, r) << " layer " << layer;
    }
  }
  EXPECT_GE(observable * 10, total * 9);
}

TEST(Verify, SensitivityMatchesFiniteChange) {
  for (const auto& c : default_suite(15, 5)) {
    for (std::size_t layer = 0; layer <= c.slice_times; ++layer) {
      const double delta = 1e-7;
      const Vector base = verify_equivalence(c, 1e-9).sliced;
      const Vector moved = verify_equivalence(c, 1e-9, Perturbation{layer, 0, 0, delta}).sliced;
      double change = 0.0;
      for (std::size_t i = 0; i < base.size(); ++i) {
        change = std::max(change, std::abs(moved[i] - base[i]) / delta);
      }
      EXPECT_NEAR(change, perturbation_sensitivity(c, layer, 0, 0), 1e-5) << "layer " << layer;
    }
  }
}

TEST(Verify, SensitivityOfScalarDemoTopLayer) {
  // Top layer folds the two child states as s2 + Wtop * s1, so dF/dWtop = s1 = 3.
  EXPECT_DOUBLE_EQ(perturbation_sensitivity(scalar_demo_case(), 1, 0, 0), 3.0);
  EXPECT_THROW(perturbation_sensitivity(scalar_demo_case(), 2, 0, 0), IndexError);
}

TEST(Verify, PerturbationOutsideNetworkThrows) {
  const EquivalenceCase c = scalar_demo_case();
  EXPECT_THROW(verify_equivalence(c, 1e-9, Perturbation{2, 0, 0, 1.0}), IndexError);
  EXPECT_THROW(verify_equivalence(c, 1e-9, Perturbation{0, 1, 0, 1.0}), IndexError);
}

TEST(Verify, ReportLine) {
  const EquivalenceCase c = scalar_demo_case();
  EXPECT_EQ(format_report(c, verify_equivalence(c, 1e-9)), "2\t1\t4\t1\t0.000e+00\tPASS");
}

TEST(LinearSlicedForward, RejectsMismatchedShapes) {
  const SlicePlan plan = build_plan({4, 2, 1});
  const std::vector<LinearRnnParams> one{LinearRnnParams::zeros(1, 1)};
  EXPECT_THROW(linear_srnn_forward(one, plan, std::vector<Vector>(4, Vector{1.0})), DimensionError);
}

}  // namespace
}  // namespace srnn
