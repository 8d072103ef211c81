// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

// JSON mappings shared by checkpoints and reports. Internal to the library.
#pragma once

#include <json.hpp>

#include "tsmixer/error.h"
#include "tsmixer/model/config.h"

namespace tsmixer::model {

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{
      {"variant", to_string(c.variant)},
      {"channels", c.channels},
      {"sl", c.sl},
      {"pl", c.pl},
      {"stride", c.stride},
      {"fl", c.fl},
      {"nl", c.nl},
      {"fs", c.fs},
      {"hf", c.hidden()},
      {"ef", c.expansion()},
      {"dropout", c.dropout},
      {"context_length", c.context_length},
      {"mask_ratio", c.mask_ratio},
  };
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.channels = j.at("channels").get<std::size_t>();
    c.sl = j.at("sl").get<std::size_t>();
    c.pl = j.at("pl").get<std::size_t>();
    c.stride = j.at("stride").get<std::size_t>();
    c.fl = j.at("fl").get<std::size_t>();
    c.nl = j.at("nl").get<std::size_t>();
    c.fs = j.at("fs").get<std::size_t>();
    c.hf = j.at("hf").get<std::size_t>();
    c.ef = j.at("ef").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.context_length = j.at("context_length").get<std::size_t>();
    c.mask_ratio = j.at("mask_ratio").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model configuration: ") + e.what());
  }
}

inline nlohmann::json backbone_to_json(const BackboneConfig& b) {
  return nlohmann::json{
      {"type", std::string(to_string(b.type))},
      {"layers", b.layers},
      {"patch_len", b.patch_len},
      {"patches", b.patches},
      {"channels", b.channels},
      {"hidden", b.hidden},
      {"expansion", b.expansion},
      {"feature_scaler", b.feature_scaler},
      {"dropout", b.dropout},
      {"gated", b.gated},
  };
}

}  // namespace tsmixer::model
