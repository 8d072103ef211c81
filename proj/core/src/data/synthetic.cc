// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/data/synthetic.h"

#include <cmath>
#include <numbers>
#include <random>

namespace tsmixer::data {

SeriesFrame sinusoid_frame(std::size_t rows, std::span<const SineChannel> channels, double noise_std,
                           std::uint64_t seed) {
  SeriesFrame frame;
  frame.rows = rows;
  frame.channels = channels.size();
  frame.values.resize(rows * channels.size());
  for (std::size_t ch = 0; ch < channels.size(); ++ch) frame.channel_names.push_back("s" + std::to_string(ch));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t ch = 0; ch < channels.size(); ++ch) {
      const SineChannel& s = channels[ch];
      double v = s.offset + s.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / s.period + s.phase);
      if (noise_std > 0.0) v += noise(rng);
      frame.at(t, ch) = v;
    }
  }
  return frame;
}

}  // namespace tsmixer::data
