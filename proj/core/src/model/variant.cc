// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/model/variant.h"

#include "tsmixer/error.h"

namespace tsmixer::model {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

constexpr std::string_view kSuffix = "-TSMixer";

}  // namespace

VariantSpec parse_variant(std::string_view name) {
  const std::string original(name);
  name = trim(name);
  std::string_view list;
  bool has_list = false;
  if (const auto open = name.find('('); open != std::string_view::npos) {
    if (name.back() != ')') throw ConfigError("variant '" + original + "': missing closing parenthesis");
    list = name.substr(open + 1, name.size() - open - 2);
    name = trim(name.substr(0, open));
    has_list = true;
  }
  const auto dash = name.find(kSuffix);
  if (dash == std::string_view::npos || dash + kSuffix.size() != name.size()) {
    throw ConfigError("variant '" + original + "': expected <V|CI|IC>-TSMixer");
  }
  const std::string_view backbone = name.substr(0, dash);
  VariantSpec spec;
  if (backbone == "V") {
    spec.backbone = BackboneType::kVanilla;
  } else if (backbone == "CI") {
    spec.backbone = BackboneType::kChannelIndependent;
  } else if (backbone == "IC") {
    spec.backbone = BackboneType::kInterChannel;
  } else {
    throw ConfigError("variant '" + original + "': unknown backbone '" + std::string(backbone) + "'");
  }
  if (!has_list) return spec;

  std::size_t begin = 0;
  while (true) {
    const auto comma = list.find(',', begin);
    const std::string_view token =
        trim(list.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin));
    bool* flag = nullptr;
    if (token == "G") {
      flag = &spec.enhancements.gated;
    } else if (token == "H") {
      flag = &spec.enhancements.hierarchy;
    } else if (token == "CC") {
      flag = &spec.enhancements.cross_channel;
    } else {
      throw ConfigError("variant '" + original + "': unknown enhancement '" + std::string(token) + "'");
    }
    if (*flag) throw ConfigError("variant '" + original + "': duplicate enhancement '" + std::string(token) + "'");
    *flag = true;
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return spec;
}

std::string_view to_string(BackboneType type) {
  switch (type) {
    case BackboneType::kVanilla:
      return "V";
    case BackboneType::kChannelIndependent:
      return "CI";
    case BackboneType::kInterChannel:
      return "IC";
  }
  return "CI";
}

std::string to_string(const VariantSpec& spec) {
  std::string out(to_string(spec.backbone));
  out += kSuffix;
  std::string list;
  auto append = [&](bool on, const char* token) {
    if (!on) return;
    if (!list.empty()) list += ',';
    list += token;
  };
  append(spec.enhancements.gated, "G");
  append(spec.enhancements.hierarchy, "H");
  append(spec.enhancements.cross_channel, "CC");
  if (!list.empty()) out += "(" + list + ")";
  return out;
}

std::vector<VariantSpec> variant_grid() {
  std::vector<VariantSpec> grid;
  for (BackboneType type : {BackboneType::kVanilla, BackboneType::kChannelIndependent, BackboneType::kInterChannel}) {
    for (int bits = 0; bits < 8; ++bits) {
      VariantSpec spec;
      spec.backbone = type;
      spec.enhancements = Enhancements{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0};
      grid.push_back(spec);
    }
  }
  return grid;
}

}  // namespace tsmixer::model
