// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/nn/tape.h"

#include "tsmixer/error.h"

namespace tsmixer::nn {

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

void Tape::record(TapeEntry entry) { entries_.push_back(std::move(entry)); }

NoGradGuard::NoGradGuard() : previous_(Tape::current().enabled_) { Tape::current().enabled_ = false; }

NoGradGuard::~NoGradGuard() { Tape::current().enabled_ = previous_; }

void backward(const Tensor& loss) {
  if (loss.numel() != 1) throw ShapeError("backward needs a scalar loss, got shape " + to_string(loss.shape()));
  Tape& tape = Tape::current();
  if (tape.entries_.empty() || !loss.requires_grad()) {
    throw ShapeError("backward called on a loss with no recorded operations");
  }
  auto& seed = loss.impl()->ensure_grad();
  seed[0] += 1.0;

  for (auto it = tape.entries_.rbegin(); it != tape.entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->backward();
  }
  tape.entries_.clear();
}

}  // namespace tsmixer::nn
