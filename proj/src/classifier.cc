// SPDX-License-Identifier: Apache-2.0
#include "srnn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "srnn/errors.hpp"

namespace srnn {

ClassifierHead ClassifierHead::zeros(std::size_t classes, std::size_t hidden_dim) {
  return {Matrix(classes, hidden_dim), Vector(classes, 0.0)};
}

ClassifierHead ClassifierHead::random(std::size_t classes, std::size_t hidden_dim,
                                      SeededRng& rng) {
  ClassifierHead head = zeros(classes, hidden_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (double& w : head.weight.data()) w = rng.uniform(-scale, scale);
  return head;
}

Vector logits(const ClassifierHead& head, std::span<const double> features) {
  if (head.bias.size() != head.weight.rows()) {
    throw DimensionError("classifier: bias of " + std::to_string(head.bias.size()) +
                         " against weight " + head.weight.shape_string());
  }
  Vector out = matvec(head.weight, features);
  add_into(out, head.bias);
  return out;
}

Vector predict(const ClassifierHead& head, std::span<const double> features) {
  return softmax(logits(head, features));
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("argmax: empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

NllResult nll_loss(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) {
    throw std::invalid_argument("nll_loss: label " + std::to_string(label) + " outside " +
                                std::to_string(probs.size()) + " classes");
  }
  NllResult out;
  // Clamp so a fully saturated wrong prediction yields a large finite loss.
  out.loss = -std::log(std::max(probs[label], std::numeric_limits<double>::min()));
  out.dlogits.assign(probs.begin(), probs.end());
  out.dlogits[label] -= 1.0;
  return out;
}

void head_backward_accumulate(const ClassifierHead& head, std::span<const double> features,
                              std::span<const double> dlogits, ClassifierHead& dhead,
                              std::span<double> dfeatures) {
  add_outer(dhead.weight, dlogits, features);
  add_into(dhead.bias, dlogits);
  for (double& v : dfeatures) v = 0.0;
  matvec_transposed_accumulate(head.weight, dlogits, dfeatures);
}

}  // namespace srnn
