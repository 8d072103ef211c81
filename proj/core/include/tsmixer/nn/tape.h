// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "tsmixer/nn/tensor.h"

namespace tsmixer::nn {

// One recorded primitive: its output, the inputs it read, and the closure
// that pushes the output gradient back into the inputs.
struct TapeEntry {
  std::string_view op;
  std::shared_ptr<TensorImpl> output;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void()> backward;
};

// Reverse-mode record for the current thread. Entries are appended in
// execution order, so the list is always topologically sorted.
class Tape {
 public:
  static Tape& current();

  bool recording() const { return enabled_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<TapeEntry>& entries() const { return entries_; }

  void record(TapeEntry entry);
  void clear() { entries_.clear(); }

 private:
  friend class NoGradGuard;
  friend void backward(const Tensor& loss);

  std::vector<TapeEntry> entries_;
  bool enabled_ = true;
};

// Disables recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Accumulates d(loss)/d(leaf) into every grad-requiring leaf reached through
// the tape, then clears the tape. Leaves that the loss does not depend on are
// left untouched; zero them beforehand to read exact zeros.
void backward(const Tensor& loss);

}  // namespace tsmixer::nn
