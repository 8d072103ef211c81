// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/model/config.h"

#include <string>

#include "tsmixer/data/patching.h"
#include "tsmixer/error.h"

namespace tsmixer::model {

std::size_t ModelConfig::patches() const { return data::patch_count(sl, pl, stride); }

BackboneConfig ModelConfig::backbone() const {
  BackboneConfig out;
  out.type = variant.backbone;
  out.layers = nl;
  out.patch_len = pl;
  out.patches = patches();
  out.channels = channels;
  out.hidden = hidden();
  out.expansion = expansion();
  out.feature_scaler = fs;
  out.dropout = dropout;
  out.gated = variant.enhancements.gated;
  return out;
}

void validate(const BackboneConfig& config) {
  if (config.patch_len == 0 || config.patches == 0 || config.channels == 0 || config.hidden == 0 ||
      config.expansion == 0 || config.feature_scaler == 0) {
    throw ConfigError("backbone dimensions must be positive");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

void validate(const ModelConfig& config) {
  if (config.channels == 0) throw ConfigError("channel count must be positive");
  if (config.sl < 2) throw ConfigError("sl must be at least 2");
  if (config.fl == 0) throw ConfigError("fl must be positive");
  if (config.fs == 0) throw ConfigError("fs must be positive");
  (void)config.patches();  // pl/s sanity
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(config.mask_ratio >= 0.0 && config.mask_ratio < 1.0)) throw ConfigError("mask_ratio must lie in [0, 1)");
  const Enhancements& enh = config.variant.enhancements;
  if (enh.cross_channel && config.variant.backbone == BackboneType::kVanilla) {
    throw ConfigError("variant " + to_string(config.variant) +
                      ": the cross-channel head needs per-channel forecasts, which V-TSMixer does not produce");
  }
  if (enh.hierarchy && config.fl % config.pl != 0) {
    throw ConfigError("variant " + to_string(config.variant) + ": fl (" + std::to_string(config.fl) +
                      ") must be divisible by pl (" + std::to_string(config.pl) + ") for the hierarchy head");
  }
  validate(config.backbone());
}

ModelConfig pretrain_defaults(ModelConfig base) {
  base.pl = 8;
  base.stride = 8;
  return base;
}

}  // namespace tsmixer::model
