// SPDX-License-Identifier: Apache-2.0
//
// Property suites that run on their own: state boundedness, softmax
// normalization, loss of a uniform prediction, checkpoint bit-exactness.

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "srnn/checkpoint.hpp"
#include "srnn/classifier.hpp"
#include "srnn/srnn_engine.hpp"
#include "test_util.hpp"

namespace srnn {
namespace {

using testing::random_matrix;
using testing::random_vector;

TEST(Invariants, GruStatesStayInUnitBoxFromZero) {
  SeededRng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng.below(6);
    const std::size_t m = 1 + rng.below(6);
    GruParams cell = GruParams::random(d, m, rng);
    for (auto block : cell.blocks())
      for (double& v : block) v = rng.uniform(-8, 8);
    const Matrix x = random_matrix(64, d, rng, 20.0);
    Vector h(m, 0.0);
    for (std::size_t t = 0; t < x.rows(); ++t) {
      h = gru_step(cell, x.row(t), h).h;
      for (double v : h) {
        ASSERT_GE(v, -1.0);
        ASSERT_LE(v, 1.0);
      }
    }
  }
}

TEST(Invariants, SlicedFeaturesStayInUnitBox) {
  SeededRng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    SrnnModel model = SrnnModel::create(build_plan({32, 2, 3}), {20, 4, 6, 2}, rng);
    for (auto& cell : model.cells)
      for (auto block : cell.blocks())
        for (double& v : block) v = rng.uniform(-5, 5);
    std::vector<TokenId> ids(32);
    for (auto& id : ids) id = static_cast<TokenId>(rng.below(20));
    for (double v : srnn_forward(model, ids).features) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Invariants, SoftmaxNormalizedAndShiftInvariant) {
  SeededRng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector v = random_vector(1 + rng.below(10), rng, 50.0);
    const Vector p = softmax(v);
    ASSERT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    Vector shifted = v;
    const double c = rng.uniform(-500, 500);
    for (double& x : shifted) x += c;
    const Vector q = softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) ASSERT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(Invariants, UniformPredictionLossIsLogClassCount) {
  SeededRng rng(5);
  for (std::size_t classes = 2; classes <= 12; ++classes) {
    const ClassifierHead head = ClassifierHead::zeros(classes, 4);
    const Vector p = predict(head, random_vector(4, rng));
    for (std::size_t label = 0; label < classes; ++label) {
      EXPECT_NEAR(nll_loss(p, label).loss, std::log(static_cast<double>(classes)), 1e-14);
    }
  }
}

TEST(Invariants, CheckpointRoundTripIsBitExact) {
  SeededRng rng(13);
  for (std::size_t trial = 0; trial < 5; ++trial) {
    SrnnModel model =
        SrnnModel::create(build_plan({16, 2, trial % 4}), {9, 3, 4, 2 + trial}, rng);
    const double scale = std::pow(10.0, -static_cast<double>(trial));
    for (double& v : model.embedding.data()) v = rng.uniform(-1e3, 1e3) * scale;
    std::stringstream buf;
    write_model(buf, model);
    const SrnnModel back = read_model(buf);
    ASSERT_EQ(back, model);
    std::stringstream again;
    write_model(again, back);
    EXPECT_EQ(again.str(), buf.str());
  }
}

}  // namespace
}  // namespace srnn
