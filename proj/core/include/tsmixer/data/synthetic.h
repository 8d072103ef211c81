// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "tsmixer/data/series.h"

namespace tsmixer::data {

struct SineChannel {
  double period = 24.0;
  double amplitude = 1.0;
  double phase = 0.0;
  double offset = 0.0;
};

// One sinusoid per channel plus optional i.i.d. Gaussian noise.
SeriesFrame sinusoid_frame(std::size_t rows, std::span<const SineChannel> channels, double noise_std = 0.0,
                           std::uint64_t seed = 0);

}  // namespace tsmixer::data
