// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/data/patching.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tsmixer/error.h"

namespace tsmixer::data {

std::size_t patch_count(std::size_t sl, std::size_t patch_len, std::size_t stride) {
  if (patch_len == 0 || stride == 0) throw ConfigError("patch length and stride must be positive");
  if (patch_len > sl) {
    throw ConfigError("patch length " + std::to_string(patch_len) + " exceeds input length " + std::to_string(sl));
  }
  return (sl - patch_len) / stride + 1;
}

std::size_t PatchBatch::masked_total() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

PatchBatch patch(const nn::Tensor& inputs, std::size_t patch_len, std::size_t stride) {
  if (inputs.rank() != 3) throw ShapeError("patch: expected b x sl x c, got " + nn::to_string(inputs.shape()));
  const std::size_t b = inputs.dim(0);
  const std::size_t sl = inputs.dim(1);
  const std::size_t c = inputs.dim(2);
  const std::size_t n = patch_count(sl, patch_len, stride);
  PatchBatch out{nn::Tensor(nn::Shape{b, c, n, patch_len}), std::vector<std::uint8_t>(b * c * n, 0), patch_len, stride};
  auto x = inputs.data();
  auto p = out.patches.mutable_data();
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t k = 0; k < n; ++k) {
        double* dst = p.data() + ((i * c + ch) * n + k) * patch_len;
        for (std::size_t j = 0; j < patch_len; ++j) dst[j] = x[(i * sl + k * stride + j) * c + ch];
      }
    }
  }
  return out;
}

PatchBatch mask_patches(const PatchBatch& batch, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("mask ratio must lie in [0, 1)");
  if (batch.stride != batch.patch_len) {
    throw ConfigError("masked pretraining needs non-overlapping patches (stride " + std::to_string(batch.stride) +
                      " != patch length " + std::to_string(batch.patch_len) + ")");
  }
  PatchBatch out{batch.patches.clone(), std::vector<std::uint8_t>(batch.mask.size(), 0), batch.patch_len, batch.stride};
  const std::size_t n = batch.count();
  const auto masked = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  if (masked == 0) return out;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  auto values = out.patches.mutable_data();
  for (std::size_t row = 0; row < batch.batch() * batch.channels(); ++row) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t m = 0; m < masked; ++m) {
      const std::size_t k = order[m];
      out.mask[row * n + k] = 1;
      std::fill_n(values.begin() + static_cast<std::ptrdiff_t>((row * n + k) * batch.patch_len), batch.patch_len, 0.0);
    }
  }
  return out;
}

}  // namespace tsmixer::data
