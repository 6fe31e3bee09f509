// SPDX-License-Identifier: Apache-2.0
//
// Softmax head over the sequence representation and its NLL loss.
#pragma once

#include <cstddef>
#include <span>

#include "srnn/rng.hpp"
#include "srnn/tensor.hpp"

namespace srnn {

struct ClassifierHead {
  Matrix weight;  // C x m
  Vector bias;    // C

  static ClassifierHead zeros(std::size_t classes, std::size_t hidden_dim);
  static ClassifierHead random(std::size_t classes, std::size_t hidden_dim, SeededRng& rng);

  std::size_t class_count() const { return weight.rows(); }
  std::size_t hidden_dim() const { return weight.cols(); }

  bool operator==(const ClassifierHead&) const = default;
};

Vector logits(const ClassifierHead& head, std::span<const double> features);

/// softmax(W F + b)
Vector predict(const ClassifierHead& head, std::span<const double> features);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

struct NllResult {
  double loss = 0.0;
  Vector dlogits;  // p - onehot(label)
};

/// -log p[label]. Throws std::invalid_argument when label >= p.size().
NllResult nll_loss(std::span<const double> probs, std::size_t label);

/// Backward through W F + b given dlogits; adds into dhead.
void head_backward_accumulate(const ClassifierHead& head, std::span<const double> features,
                              std::span<const double> dlogits, ClassifierHead& dhead,
                              std::span<double> dfeatures);

}  // namespace srnn
