// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

// Shared helpers for the test binaries.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tsmixer/model/config.h"
#include "tsmixer/nn/tensor.h"

namespace tsmixer::testing {

inline nn::Tensor random_tensor(nn::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                                bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> values(nn::numel(shape));
  for (double& v : values) v = dist(rng);
  return nn::Tensor(std::move(shape), std::move(values), requires_grad);
}

inline bool bitwise_equal(const nn::Tensor& a, const nn::Tensor& b) {
  if (a.shape() != b.shape()) return false;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(x[i]) != std::bit_cast<std::uint64_t>(y[i])) return false;
  }
  return true;
}

inline double max_abs_diff(const nn::Tensor& a, const nn::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Small configuration for fast model tests.
inline model::ModelConfig toy_config(const char* variant, std::size_t channels) {
  model::ModelConfig c;
  c.variant = model::parse_variant(variant);
  c.channels = channels;
  c.sl = 32;
  c.pl = 8;
  c.stride = 8;
  c.fl = 16;
  c.nl = 2;
  c.dropout = 0.0;
  return c;
}

}  // namespace tsmixer::testing
