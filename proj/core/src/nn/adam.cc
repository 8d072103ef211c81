// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/nn/adam.h"

#include <cmath>

#include "tsmixer/error.h"

namespace tsmixer::nn {

Adam::Adam(ParameterSet params, AdamOptions options) : params_(std::move(params)), options_(options) {
  moments_.reserve(params_.size());
  for (const auto& p : params_.items()) {
    moments_.push_back(Moments{std::vector<double>(p.value.numel(), 0.0), std::vector<double>(p.value.numel(), 0.0), 0});
  }
}

void Adam::step() {
  const auto items = params_.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    Tensor value = items[i].value;
    if (!value.requires_grad()) continue;
    if (!value.has_grad()) throw ShapeError("adam: parameter '" + items[i].name + "' has no gradient");
    Moments& m = moments_[i];
    ++m.steps;
    const double correction1 = 1.0 - std::pow(options_.beta1, static_cast<double>(m.steps));
    const double correction2 = 1.0 - std::pow(options_.beta2, static_cast<double>(m.steps));
    auto data = value.mutable_data();
    auto grad = value.grad();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = grad[j];
      m.first[j] = options_.beta1 * m.first[j] + (1.0 - options_.beta1) * g;
      m.second[j] = options_.beta2 * m.second[j] + (1.0 - options_.beta2) * g * g;
      const double m_hat = m.first[j] / correction1;
      const double v_hat = m.second[j] / correction2;
      data[j] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
  ++steps_;
}

}  // namespace tsmixer::nn
