// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "tsmixer/model/variant.h"

namespace tsmixer::model {

// Backbone hyperparameters. Every mixing MLP expands its input width by
// `feature_scaler`: n -> fs*n for patches, hf -> ef for features and
// c -> fs*c for channels.
struct BackboneConfig {
  BackboneType type = BackboneType::kChannelIndependent;
  std::size_t layers = 8;      // nl
  std::size_t patch_len = 16;  // pl
  std::size_t patches = 63;    // n
  std::size_t channels = 1;    // c of the input data
  std::size_t hidden = 32;     // hf
  std::size_t expansion = 64;  // ef
  std::size_t feature_scaler = 2;
  double dropout = 0.1;
  bool gated = false;

  // Channel rows seen by the mixer stack: 1 for V, c otherwise.
  std::size_t mixer_channels() const { return type == BackboneType::kVanilla ? 1 : channels; }
  std::size_t embed_in() const { return type == BackboneType::kVanilla ? channels * patch_len : patch_len; }
  std::size_t patch_mix_width() const { return feature_scaler * patches; }
  std::size_t channel_mix_width() const { return feature_scaler * channels; }
};

// Full model hyperparameters. Defaults are the long-horizon benchmark setup.
struct ModelConfig {
  VariantSpec variant;
  std::size_t channels = 7;  // c
  std::size_t sl = 512;
  std::size_t pl = 16;
  std::size_t stride = 8;
  std::size_t fl = 96;
  std::size_t nl = 8;
  std::size_t fs = 2;
  std::size_t hf = 0;  // 0: derived as fs * pl
  std::size_t ef = 0;  // 0: derived as fs * hf
  double dropout = 0.1;
  std::size_t context_length = 1;  // cl of the cross-channel head
  double mask_ratio = 0.4;

  std::size_t hidden() const { return hf != 0 ? hf : fs * pl; }
  std::size_t expansion() const { return ef != 0 ? ef : fs * hidden(); }
  std::size_t patches() const;
  std::size_t output_patches() const { return fl / pl; }
  BackboneConfig backbone() const;
};

// Rejects inconsistent or unsupported combinations with a ConfigError.
void validate(const ModelConfig& config);
void validate(const BackboneConfig& config);

// Self-supervised defaults: non-overlapping patches with pl = s = 8, which
// the derived hf/ef follow (16 / 32).
ModelConfig pretrain_defaults(ModelConfig base);

}  // namespace tsmixer::model
