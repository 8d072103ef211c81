// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <utility>

#include "tsmixer/nn/tensor.h"

namespace tsmixer::data {

// Reversible instance normalization: each window's channels are centred on
// their own mean and divided by (population std + eps).
inline constexpr double kRevinEps = 1e-5;

struct RevinStats {
  nn::Tensor mean;   // b x 1 x c
  nn::Tensor stdev;  // b x 1 x c, population std (eps not included)
};

std::pair<nn::Tensor, RevinStats> revin_normalize(const nn::Tensor& inputs);

// outputs * (stdev + eps) + mean. Differentiable in `outputs`, so the model
// can train against targets in the scaler's space.
nn::Tensor revin_denormalize(const nn::Tensor& outputs, const RevinStats& stats);

// Inverse map for patch sums laid out b x c x op: each aggregate covers
// `patch_len` timesteps, so it is rescaled and shifted by patch_len * mean.
nn::Tensor revin_denormalize_aggregates(const nn::Tensor& aggregates, const RevinStats& stats, std::size_t patch_len);

// Applies the forward map with previously computed statistics (b x T x c).
nn::Tensor revin_apply(const nn::Tensor& values, const RevinStats& stats);

}  // namespace tsmixer::data
