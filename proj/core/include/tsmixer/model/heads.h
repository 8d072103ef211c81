// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "tsmixer/nn/module.h"

namespace tsmixer::model {

// Flattens each channel's n x hf features, applies dropout and one linear
// map to `out_len` values. Shared across channels; for the vanilla backbone
// (one flattened channel row) the map emits all `groups` channels at once.
class FlattenHead {
 public:
  FlattenHead() = default;
  FlattenHead(std::size_t patches, std::size_t hidden, std::size_t out_len, std::size_t groups, double dropout,
              std::mt19937_64& rng);

  // b x c' x n x hf -> b x out_len x (c' * groups)
  nn::Tensor forward(const nn::Tensor& features, const nn::ForwardContext& ctx) const;
  void collect(nn::ParameterSet& out, const std::string& prefix) const;

  nn::Linear& linear() { return linear_; }
  std::size_t out_len() const { return out_len_; }

 private:
  nn::Linear linear_;
  std::size_t out_len_ = 0;
  std::size_t groups_ = 1;
  double dropout_ = 0.0;
};

// Emits the fl-step forecast.
using PredictionHead = FlattenHead;
// Emits an sl-step reconstruction of the input window.
using PretrainHead = FlattenHead;

struct HierarchyOutput {
  nn::Tensor reconciled;  // b x fl x c
  nn::Tensor aggregates;  // b x c x op, predicted patch sums
};

// Online hierarchical patch reconciliation. Predicts one aggregate per
// output patch from the whole horizon, then corrects every patch from its
// own values plus that aggregate; residual on the patch values.
class HierarchyHead {
 public:
  HierarchyHead() = default;
  HierarchyHead(std::size_t horizon, std::size_t patch_len, std::mt19937_64& rng);

  HierarchyOutput forward(const nn::Tensor& forecast) const;
  void collect(nn::ParameterSet& out, const std::string& prefix) const;

  std::size_t output_patches() const { return horizon_ / patch_len_; }
  std::size_t patch_len() const { return patch_len_; }
  nn::Linear& aggregate() { return aggregate_; }
  nn::Linear& reconcile() { return reconcile_; }

 private:
  std::size_t horizon_ = 0;
  std::size_t patch_len_ = 0;
  nn::Linear aggregate_;  // fl -> op
  nn::Linear reconcile_;  // pl + 1 -> pl
};

// Cross-channel forecast reconciliation. Each horizon step gathers the
// 2*cl + 1 surrounding steps of every channel (edges replicated), gates the
// flattened c * spl vector, maps it to c corrections, and adds them back.
class CrossChannelHead {
 public:
  CrossChannelHead() = default;
  CrossChannelHead(std::size_t channels, std::size_t context_length, std::mt19937_64& rng);

  nn::Tensor forward(const nn::Tensor& forecast) const;
  void collect(nn::ParameterSet& out, const std::string& prefix) const;

  std::size_t span_len() const { return 2 * context_ + 1; }
  std::size_t flat_width() const { return channels_ * span_len(); }
  nn::Linear& gate() { return gate_; }
  nn::Linear& output() { return output_; }

  // d^2 + d + d*c + c with d = c * (2*cl + 1).
  static std::size_t param_count(std::size_t channels, std::size_t context_length);

 private:
  std::size_t channels_ = 0;
  std::size_t context_ = 0;
  nn::Linear gate_;    // d -> d, softmax-gated
  nn::Linear output_;  // d -> c
};

// Sums each run of `patch_len` horizon steps: b x fl x c -> b x c x op.
nn::Tensor bu_aggregate(const nn::Tensor& forecast, std::size_t patch_len);

// (1/sf) L(H_hat, H) + L(Y, Y_rec) + (1/sf) L(BU(Y_rec), H_hat) with L = MSE,
// H = BU(Y) and sf = pl^2.
nn::Tensor hier_loss(const nn::Tensor& target, const nn::Tensor& reconciled, const nn::Tensor& aggregates,
                     std::size_t patch_len);

// MSE over timesteps that belong to masked patches only. `mask` is
// b x c x n with non-overlapping patches of `patch_len`.
nn::Tensor masked_mse(const nn::Tensor& target, const nn::Tensor& reconstruction,
                      std::span<const std::uint8_t> mask, std::size_t patch_len);

}  // namespace tsmixer::model
