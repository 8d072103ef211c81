// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tsmixer/nn/tensor.h"

namespace tsmixer::data {

// floor((sl - pl) / s) + 1; throws ConfigError when pl > sl or pl, s are zero.
std::size_t patch_count(std::size_t sl, std::size_t patch_len, std::size_t stride);

struct PatchBatch {
  nn::Tensor patches;          // b x c x n x pl
  std::vector<std::uint8_t> mask;  // b x c x n, 1 = masked
  std::size_t patch_len = 0;
  std::size_t stride = 0;

  std::size_t batch() const { return patches.dim(0); }
  std::size_t channels() const { return patches.dim(1); }
  std::size_t count() const { return patches.dim(2); }
  std::size_t masked_total() const;
};

// patches[b][ch][i][j] = inputs[b][i*s + j][ch]; trailing rows past the last
// full patch are dropped.
PatchBatch patch(const nn::Tensor& inputs, std::size_t patch_len, std::size_t stride);

// Masks exactly floor(ratio * n) patches per (window, channel), sampled
// without replacement, and zeroes their values. Requires stride == patch_len.
PatchBatch mask_patches(const PatchBatch& batch, double ratio, std::uint64_t seed);

}  // namespace tsmixer::data
