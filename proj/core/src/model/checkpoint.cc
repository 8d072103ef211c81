// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/model/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "config_json.h"
#include "tsmixer/error.h"

namespace tsmixer::model {
namespace {

constexpr const char* kFormat = "tsmixer-checkpoint";
constexpr int kVersion = 1;

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

void put_f32(std::ostream& out, float value) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  unsigned char bytes[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                            static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

float get_f32(const unsigned char* bytes) {
  const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::size_t Checkpoint::total_elements() const {
  std::size_t total = 0;
  for (const auto& t : tensors) total += t.values.size();
  return total;
}

void write_checkpoint(const std::filesystem::path& stem, CheckpointKind kind, const ModelConfig& config,
                      const nn::ParameterSet& params) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  nlohmann::json tensors = nlohmann::json::array();
  std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary | std::ios::trunc);
  if (!bin) throw DataError("cannot write checkpoint '" + stem.string() + ".bin'");
  std::size_t offset = 0;
  for (const auto& p : params.items()) {
    for (double v : p.value.data()) put_f32(bin, static_cast<float>(v));
    tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"offset", offset}, {"count", p.value.numel()}});
    offset += p.value.numel();
  }
  const auto& enh = config.variant.enhancements;
  nlohmann::json manifest{
      {"format", kFormat},
      {"version", kVersion},
      {"kind", kind == CheckpointKind::kBackbone ? "backbone" : "forecast"},
      {"dtype", "float32-le"},
      {"model_config", config_to_json(config)},
      {"backbone_config", backbone_to_json(config.backbone())},
      {"enhancements", {{"G", enh.gated}, {"H", enh.hierarchy}, {"CC", enh.cross_channel}}},
      {"total_elements", offset},
      {"tensors", tensors},
  };
  std::ofstream json(with_suffix(stem, ".json"), std::ios::trunc);
  if (!json) throw DataError("cannot write checkpoint '" + stem.string() + ".json'");
  json << manifest.dump(2) << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& stem) {
  std::ifstream json(with_suffix(stem, ".json"));
  if (!json) throw DataError("cannot open checkpoint manifest '" + stem.string() + ".json'");
  nlohmann::json manifest;
  try {
    json >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint manifest is not valid JSON: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != kFormat || manifest.value("version", 0) != kVersion) {
    throw DataError("unsupported checkpoint format in '" + stem.string() + ".json'");
  }
  Checkpoint ckpt;
  ckpt.kind = manifest.at("kind") == "backbone" ? CheckpointKind::kBackbone : CheckpointKind::kForecast;
  ckpt.config = config_from_json(manifest.at("model_config"));

  std::ifstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw DataError("cannot open checkpoint data '" + stem.string() + ".bin'");
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  const std::size_t total = manifest.at("total_elements").get<std::size_t>();
  if (raw.size() != total * 4) throw DataError("checkpoint data size does not match its manifest");
  for (const auto& entry : manifest.at("tensors")) {
    StoredTensor t;
    t.name = entry.at("name").get<std::string>();
    t.shape = entry.at("shape").get<nn::Shape>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto count = entry.at("count").get<std::size_t>();
    if (count != nn::numel(t.shape) || offset + count > total) {
      throw DataError("checkpoint tensor '" + t.name + "' has an inconsistent extent");
    }
    t.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) t.values[i] = get_f32(raw.data() + (offset + i) * 4);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

void load_parameters(const Checkpoint& checkpoint, const nn::ParameterSet& params) {
  for (const auto& p : params.items()) {
    const auto it = std::find_if(checkpoint.tensors.begin(), checkpoint.tensors.end(),
                                 [&](const StoredTensor& t) { return t.name == p.name; });
    if (it == checkpoint.tensors.end()) throw DataError("checkpoint lacks parameter '" + p.name + "'");
    if (it->shape != p.value.shape()) {
      throw DataError("checkpoint parameter '" + p.name + "' has shape " + nn::to_string(it->shape) + ", model expects " +
                      nn::to_string(p.value.shape()));
    }
    nn::Tensor target = p.value;
    auto data = target.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<double>(it->values[i]);
  }
}

void save_backbone(const std::filesystem::path& stem, const Backbone& backbone, const ModelConfig& config) {
  write_checkpoint(stem, CheckpointKind::kBackbone, config, backbone.parameters());
}

Backbone load_backbone(const Checkpoint& checkpoint) {
  std::mt19937_64 rng(0);
  Backbone backbone(checkpoint.config.backbone(), rng);
  load_parameters(checkpoint, backbone.parameters());
  return backbone;
}

void save_forecast_model(const std::filesystem::path& stem, const ForecastModel& model) {
  write_checkpoint(stem, CheckpointKind::kForecast, model.config(), model.parameters());
}

ForecastModel load_forecast_model(const std::filesystem::path& stem) {
  const Checkpoint ckpt = read_checkpoint(stem);
  if (ckpt.kind != CheckpointKind::kForecast) throw ConfigError("'" + stem.string() + "' is a backbone-only checkpoint");
  ForecastModel model(ckpt.config, 0);
  load_parameters(ckpt, model.parameters());
  return model;
}

}  // namespace tsmixer::model
