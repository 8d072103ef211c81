// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tsmixer/nn/tensor.h"

namespace tsmixer::nn {

// Differentiable primitives. Each records itself on the thread's Tape when
// recording is enabled and at least one input requires a gradient.

// a: [..., m, k] with b: [k, n] -> [..., m, n]; or batched a: [B..., m, k]
// with b: [B..., k, n] of equal rank and batch extents.
Tensor matmul(const Tensor& a, const Tensor& b);

// Numpy-style broadcasting elementwise arithmetic.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

// Exact (erf-based) Gaussian error linear unit.
Tensor gelu(const Tensor& x);

// Sum of all elements as a rank-0 tensor.
Tensor sum(const Tensor& x);
// Sum over one axis; the axis is removed from the result.
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, std::span<const std::size_t> perm);
Tensor permute(const Tensor& x, std::initializer_list<std::size_t> perm);
Tensor transpose(const Tensor& x, std::size_t axis_a, std::size_t axis_b);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
// Gathers positions along `axis`; indices may repeat (gradients accumulate).
Tensor index_select(const Tensor& x, std::size_t axis, std::span<const std::size_t> indices);

Tensor softmax(const Tensor& x, std::size_t axis);
// Normalizes over the last axis with population variance: (x - mean) / sqrt(var + eps).
Tensor layernorm(const Tensor& x, double eps);

// Inverted dropout: kept values are divided by (1 - p). Returns `x` itself
// (same storage) when not training or p == 0.
Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng);

// Mean of squared differences as a rank-0 tensor.
Tensor mse(const Tensor& prediction, const Tensor& target);

// Multiply-accumulate counter fed by matmul on the current thread.
class MacCounter {
 public:
  MacCounter();
  ~MacCounter();
  MacCounter(const MacCounter&) = delete;
  MacCounter& operator=(const MacCounter&) = delete;

  std::uint64_t count() const;

 private:
  std::uint64_t start_;
};

}  // namespace tsmixer::nn
