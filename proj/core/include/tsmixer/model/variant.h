// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tsmixer::model {

enum class BackboneType {
  kVanilla,             // V: channels flattened into each patch
  kChannelIndependent,  // CI: one weight set shared by every channel
  kInterChannel,        // IC: CI plus a channel-mixing block per layer
};

struct Enhancements {
  bool gated = false;          // G: gated attention in every mixer block
  bool hierarchy = false;      // H: hierarchical patch reconciliation head
  bool cross_channel = false;  // CC: cross-channel reconciliation head

  bool operator==(const Enhancements&) const = default;
};

// Parsed "<Backbone>-TSMixer(<enhancements>)" identity.
struct VariantSpec {
  BackboneType backbone = BackboneType::kChannelIndependent;
  Enhancements enhancements;

  bool operator==(const VariantSpec&) const = default;
};

// Accepts "CI-TSMixer", "V-TSMixer", "IC-TSMixer(G,H,CC)" and so on; the
// enhancement list is order-insensitive. Throws ConfigError naming the
// offending token.
VariantSpec parse_variant(std::string_view name);

// Canonical form, enhancements printed in G, H, CC order.
std::string to_string(const VariantSpec& spec);
std::string_view to_string(BackboneType type);

// Every backbone x enhancement-subset combination (3 x 8).
std::vector<VariantSpec> variant_grid();

}  // namespace tsmixer::model
