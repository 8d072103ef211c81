// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/data/windows.h"

#include <numeric>

#include "tsmixer/error.h"
#include "tsmixer/log.h"

namespace tsmixer::data {

std::size_t window_count(std::size_t length, std::size_t sl, std::size_t fl, std::size_t window_stride) {
  if (window_stride == 0) throw ConfigError("window stride must be positive");
  if (length < sl + fl) return 0;
  return (length - sl - fl) / window_stride + 1;
}

WindowSet::WindowSet(SeriesFrame segment, std::size_t sl, std::size_t fl, std::size_t window_stride)
    : segment_(std::move(segment)), sl_(sl), fl_(fl) {
  if (sl == 0 || fl == 0) throw ConfigError("sl and fl must be positive");
  const std::size_t count = window_count(segment_.rows, sl, fl, window_stride);
  starts_.reserve(count);
  for (std::size_t w = 0; w < count; ++w) starts_.push_back(w * window_stride);
}

WindowBatch WindowSet::gather(std::span<const std::size_t> windows) const {
  if (windows.empty()) throw DataError("cannot gather an empty batch");
  const std::size_t c = segment_.channels;
  const std::size_t b = windows.size();
  WindowBatch batch{nn::Tensor(nn::Shape{b, sl_, c}), nn::Tensor(nn::Shape{b, fl_, c}), {}};
  auto in = batch.inputs.mutable_data();
  auto out = batch.targets.mutable_data();
  for (std::size_t i = 0; i < b; ++i) {
    if (windows[i] >= starts_.size()) throw DataError("window index out of range");
    const std::size_t start = starts_[windows[i]];
    batch.starts.push_back(start);
    const auto first = segment_.values.begin() + static_cast<std::ptrdiff_t>(start * c);
    std::copy_n(first, sl_ * c, in.begin() + static_cast<std::ptrdiff_t>(i * sl_ * c));
    std::copy_n(first + static_cast<std::ptrdiff_t>(sl_ * c), fl_ * c,
                out.begin() + static_cast<std::ptrdiff_t>(i * fl_ * c));
  }
  return batch;
}

WindowSet make_windows(const SeriesFrame& segment, std::size_t sl, std::size_t fl, std::size_t window_stride) {
  if (segment.rows < sl + fl) {
    warn("segment of " + std::to_string(segment.rows) + " rows is shorter than sl+fl = " + std::to_string(sl + fl) +
         "; no windows emitted");
  }
  return WindowSet(segment, sl, fl, window_stride);
}

std::vector<std::vector<std::size_t>> group_batches(std::span<const std::size_t> order, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return groups;
}

std::vector<std::vector<std::size_t>> group_batches(std::size_t count, std::size_t batch_size) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  return group_batches(order, batch_size);
}

}  // namespace tsmixer::data
