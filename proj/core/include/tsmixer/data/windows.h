// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tsmixer/data/series.h"
#include "tsmixer/nn/tensor.h"

namespace tsmixer::data {

// Number of (input, target) windows in a segment of `length` rows.
std::size_t window_count(std::size_t length, std::size_t sl, std::size_t fl, std::size_t window_stride = 1);

struct WindowBatch {
  nn::Tensor inputs;   // b x sl x c
  nn::Tensor targets;  // b x fl x c
  std::vector<std::size_t> starts;  // first input row of each window
};

// Sliding windows over one segment; the target block immediately follows
// its input block. The segment is copied, so the set is self-contained.
class WindowSet {
 public:
  WindowSet(SeriesFrame segment, std::size_t sl, std::size_t fl, std::size_t window_stride = 1);

  std::size_t size() const { return starts_.size(); }
  bool empty() const { return starts_.empty(); }
  std::size_t input_length() const { return sl_; }
  std::size_t horizon() const { return fl_; }
  std::size_t channels() const { return segment_.channels; }
  std::size_t start(std::size_t window) const { return starts_[window]; }
  const SeriesFrame& segment() const { return segment_; }

  WindowBatch gather(std::span<const std::size_t> windows) const;

 private:
  SeriesFrame segment_;
  std::size_t sl_;
  std::size_t fl_;
  std::vector<std::size_t> starts_;
};

// Emits a warning and an empty set when the segment is shorter than sl + fl.
WindowSet make_windows(const SeriesFrame& segment, std::size_t sl, std::size_t fl, std::size_t window_stride = 1);

// Splits `order` into consecutive groups of `batch_size`; the last group
// keeps the remainder.
std::vector<std::vector<std::size_t>> group_batches(std::span<const std::size_t> order, std::size_t batch_size);
std::vector<std::vector<std::size_t>> group_batches(std::size_t count, std::size_t batch_size);

}  // namespace tsmixer::data
