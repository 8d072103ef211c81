// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <string>

#include "support.h"
#include "tsmixer/error.h"
#include "tsmixer/model/backbone.h"
#include "tsmixer/model/config.h"
#include "tsmixer/model/variant.h"
#include "tsmixer/nn/gradcheck.h"
#include "tsmixer/nn/ops.h"

using namespace tsmixer;
using tsmixer::testing::bitwise_equal;
using tsmixer::testing::random_tensor;

namespace {

void zero(nn::Tensor t) {
  for (double& v : t.mutable_data()) v = 0.0;
}

void zero_all(const nn::ParameterSet& params) {
  for (const auto& p : params.items()) zero(p.value);
}

model::BackboneConfig small_backbone(model::BackboneType type, std::size_t channels, bool gated) {
  model::BackboneConfig c;
  c.type = type;
  c.layers = 2;
  c.patch_len = 4;
  c.patches = 5;
  c.channels = channels;
  c.hidden = 6;
  c.expansion = 12;
  c.dropout = 0.0;
  c.gated = gated;
  return c;
}

// Swaps channels a and b along `axis` of a tensor.
nn::Tensor swap_channels(const nn::Tensor& x, std::size_t axis, std::size_t a, std::size_t b) {
  std::vector<std::size_t> order(x.dim(axis));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::swap(order[a], order[b]);
  return nn::index_select(x, axis, order);
}

}  // namespace

TEST_CASE("variant names parse to their specs") {
  const model::VariantSpec full = model::parse_variant("CI-TSMixer(G,H,CC)");
  CHECK(full.backbone == model::BackboneType::kChannelIndependent);
  CHECK(full.enhancements.gated);
  CHECK(full.enhancements.hierarchy);
  CHECK(full.enhancements.cross_channel);
  const model::VariantSpec vanilla = model::parse_variant("V-TSMixer");
  CHECK(vanilla.backbone == model::BackboneType::kVanilla);
  CHECK(vanilla.enhancements == model::Enhancements{});
  CHECK(model::parse_variant("CI-TSMixer(H,G)") == model::parse_variant("CI-TSMixer(G,H)"));
  CHECK(model::to_string(model::parse_variant("CI-TSMixer(H,G)")) == "CI-TSMixer(G,H)");
  CHECK(model::to_string(model::parse_variant("IC-TSMixer(CC, G)")) == "IC-TSMixer(G,CC)");
}

TEST_CASE("variant parsing names the offending token") {
  auto message_of = [](const char* name) {
    try {
      (void)model::parse_variant(name);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message_of("XX-TSMixer").find("XX") != std::string::npos);
  CHECK(message_of("CI-TSMixer(G,Q)").find("Q") != std::string::npos);
  CHECK_FALSE(message_of("CI-TSMixer(G,G)").empty());
  CHECK_FALSE(message_of("CI-Mixer").empty());
  CHECK_FALSE(message_of("CI-TSMixer(G").empty());
}

TEST_CASE("parse, print, parse is the identity over the whole grid") {
  const auto grid = model::variant_grid();
  CHECK(grid.size() == 24);
  std::set<std::string> names;
  for (const auto& spec : grid) {
    const std::string name = model::to_string(spec);
    names.insert(name);
    CHECK(model::parse_variant(name) == spec);
    CHECK(model::to_string(model::parse_variant(name)) == name);
  }
  CHECK(names.size() == 24);
}

TEST_CASE("config validity over the grid") {
  for (const auto& spec : model::variant_grid()) {
    model::ModelConfig c = tsmixer::testing::toy_config("CI-TSMixer", 3);
    c.variant = spec;
    const bool v_cc = spec.backbone == model::BackboneType::kVanilla && spec.enhancements.cross_channel;
    if (v_cc) {
      CHECK_THROWS_AS(model::validate(c), ConfigError);
    } else {
      CHECK_NOTHROW(model::validate(c));
    }
    c.fl = 20;  // not a multiple of pl = 8
    if (v_cc || spec.enhancements.hierarchy) {
      CHECK_THROWS_AS(model::validate(c), ConfigError);
    } else {
      CHECK_NOTHROW(model::validate(c));
    }
  }
}

TEST_CASE("derived widths follow the feature scaler") {
  model::ModelConfig c;
  CHECK(c.hidden() == 32);
  CHECK(c.expansion() == 64);
  CHECK(c.patches() == 63);
  const model::ModelConfig p = model::pretrain_defaults(c);
  CHECK(p.patches() == 64);
  CHECK(p.hidden() == 16);
  c.hf = 48;
  CHECK(c.expansion() == 96);
}

TEST_CASE("embedding shapes and linearity") {
  model::ModelConfig c;
  c.channels = 1;
  std::mt19937_64 rng(1);
  model::Backbone bb(c.backbone(), rng);
  const nn::Tensor out = bb.embed(random_tensor({8, 1, 63, 16}, 3));
  CHECK(out.shape() == nn::Shape{8, 1, 63, 32});

  zero(bb.embedding().bias());
  const nn::Tensor zeros = bb.embed(nn::Tensor(nn::Shape{2, 1, 63, 16}));
  for (double v : zeros.data()) CHECK(v == 0.0);
  CHECK_THROWS_AS(bb.embed(nn::Tensor(nn::Shape{2, 1, 63, 8})), ShapeError);
}

TEST_CASE("CI embedding commutes with channel permutations") {
  std::mt19937_64 rng(2);
  model::Backbone bb(small_backbone(model::BackboneType::kChannelIndependent, 7, false), rng);
  const nn::Tensor x = random_tensor({2, 7, 5, 4}, 5);
  CHECK(bitwise_equal(bb.embed(swap_channels(x, 1, 0, 5)), swap_channels(bb.embed(x), 1, 0, 5)));
}

TEST_CASE("vanilla backbone flattens channels into each patch") {
  std::mt19937_64 rng(3);
  model::Backbone bb(small_backbone(model::BackboneType::kVanilla, 3, false), rng);
  CHECK(bb.embedding().in_features() == 12);
  const nn::Tensor out = bb.forward(random_tensor({2, 3, 5, 4}, 7), {});
  CHECK(out.shape() == nn::Shape{2, 1, 5, 6});
  CHECK_THROWS_AS(bb.forward(random_tensor({2, 4, 5, 4}, 7), {}), ShapeError);
}

TEST_CASE("mlp block parameter count and zero map") {
  std::mt19937_64 rng(4);
  model::MlpBlock mlp(63, 64, 0.0, rng);
  nn::ParameterSet params;
  mlp.collect(params, "mlp");
  CHECK(params.numel() == 63 * 64 + 64 + 64 * 63 + 63);
  CHECK(params.numel() == 8191);
  zero_all(params);
  const nn::Tensor y = mlp.forward(random_tensor({4, 63}, 9), {});
  for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("mlp block gradient check") {
  std::mt19937_64 rng(5);
  model::MlpBlock mlp(7, 14, 0.0, rng);
  const nn::Tensor x = random_tensor({4, 7}, 11);
  const auto r = nn::finite_diff_check(
      [&](const nn::Tensor& v) { return nn::sum(nn::mul(mlp.forward(v, {}), random_tensor({4, 7}, 12))); }, x);
  CHECK(r.passed);
  nn::ParameterSet params;
  mlp.collect(params, "mlp");
  const auto rp = nn::finite_diff_check([&] { return nn::mse(mlp.forward(x, {}), random_tensor({4, 7}, 13)); }, params);
  CHECK(rp.passed);
}

TEST_CASE("gated attention with a zero map is uniform") {
  std::mt19937_64 rng(6);
  model::GatedAttention ga(4, rng);
  zero(ga.projection().weight());
  zero(ga.projection().bias());
  const nn::Tensor x = random_tensor({3, 4}, 15);
  const nn::Tensor y = ga.forward(x);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == doctest::Approx(x.data()[i] / 4.0).epsilon(1e-14));
}

TEST_CASE("gated attention with logits (ln 3, 0)") {
  std::mt19937_64 rng(7);
  model::GatedAttention ga(2, rng);
  zero(ga.projection().weight());
  ga.projection().bias().mutable_data()[0] = std::log(3.0);
  ga.projection().bias().mutable_data()[1] = 0.0;
  const nn::Tensor x = nn::Tensor::from({1, 2}, {2.0, -4.0});
  const nn::Tensor w = ga.weights(x);
  CHECK(w.data()[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(w.data()[1] == doctest::Approx(0.25).epsilon(1e-14));
  const nn::Tensor y = ga.forward(x);
  CHECK(y.data()[0] == doctest::Approx(1.5));
  CHECK(y.data()[1] == doctest::Approx(-1.0));
}

TEST_CASE("gated attention weights sum to one and attenuate") {
  std::mt19937_64 rng(8);
  model::GatedAttention ga(9, rng);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const nn::Tensor x = random_tensor({5, 9}, 100 + seed, -3, 3);
    const nn::Tensor w = ga.weights(x);
    const nn::Tensor y = ga.forward(x);
    for (std::size_t r = 0; r < 5; ++r) {
      double s = 0.0;
      double wmax = 0.0;
      for (std::size_t j = 0; j < 9; ++j) {
        s += w.data()[r * 9 + j];
        wmax = std::max(wmax, w.data()[r * 9 + j]);
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
      for (std::size_t j = 0; j < 9; ++j) {
        CHECK(std::abs(y.data()[r * 9 + j]) <= wmax * std::abs(x.data()[r * 9 + j]) + 1e-15);
      }
    }
  }
}

TEST_CASE("mixer layer with zero MLPs and no gate is the identity") {
  for (auto type : {model::BackboneType::kChannelIndependent, model::BackboneType::kInterChannel}) {
    std::mt19937_64 rng(9);
    model::MixerLayer layer(small_backbone(type, 3, false), rng);
    nn::ParameterSet params;
    layer.collect(params, "layer");
    for (const auto& p : params.items()) {
      if (p.name.find(".fc2") != std::string::npos) zero(p.value);
    }
    const nn::Tensor x = random_tensor({2, 3, 5, 6}, 17);
    CHECK(bitwise_equal(layer.forward(x, {}), x));
  }
}

TEST_CASE("CI mixer layer is channel-local and IC is not") {
  const nn::Tensor x = random_tensor({2, 3, 5, 6}, 19);
  nn::Tensor perturbed = x.clone();
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 6; ++j) perturbed.mutable_data()[((b * 3 + 1) * 5 + i) * 6 + j] += 0.5;

  std::mt19937_64 rng(10);
  model::MixerLayer ci(small_backbone(model::BackboneType::kChannelIndependent, 3, true), rng);
  const nn::Tensor a = ci.forward(x, {});
  const nn::Tensor b = ci.forward(perturbed, {});
  for (std::size_t ch : {0u, 2u}) {
    CHECK(bitwise_equal(nn::slice(a, 1, ch, 1), nn::slice(b, 1, ch, 1)));
  }
  CHECK_FALSE(bitwise_equal(nn::slice(a, 1, 1, 1), nn::slice(b, 1, 1, 1)));

  std::mt19937_64 rng2(10);
  model::MixerLayer ic(small_backbone(model::BackboneType::kInterChannel, 3, true), rng2);
  const nn::Tensor c = ic.forward(x, {});
  const nn::Tensor d = ic.forward(perturbed, {});
  CHECK_FALSE(bitwise_equal(nn::slice(c, 1, 0, 1), nn::slice(d, 1, 0, 1)));
}

TEST_CASE("IC channel swap does not commute") {
  std::mt19937_64 rng(11);
  model::MixerLayer ic(small_backbone(model::BackboneType::kInterChannel, 2, false), rng);
  const nn::Tensor x = random_tensor({1, 2, 5, 6}, 21);
  const nn::Tensor lhs = ic.forward(swap_channels(x, 1, 0, 1), {});
  const nn::Tensor rhs = swap_channels(ic.forward(x, {}), 1, 0, 1);
  CHECK(tsmixer::testing::max_abs_diff(lhs, rhs) > 1e-6);
}

TEST_CASE("gradient check through one mixer layer per backbone with gating") {
  for (auto type : {model::BackboneType::kVanilla, model::BackboneType::kChannelIndependent,
                    model::BackboneType::kInterChannel}) {
    std::mt19937_64 rng(12);
    const auto config = small_backbone(type, 3, true);
    model::MixerLayer layer(config, rng);
    nn::ParameterSet params;
    layer.collect(params, "layer");
    const std::size_t rows = config.mixer_channels();
    const nn::Tensor x = random_tensor({2, rows, 5, 6}, 23);
    const nn::Tensor target = random_tensor({2, rows, 5, 6}, 24);
    const auto r = nn::finite_diff_check([&] { return nn::mse(layer.forward(x, {}), target); }, params);
    INFO(model::to_string(type) << ": worst " << r.worst << " rel " << r.max_rel_error);
    CHECK(r.passed);
    const auto rx = nn::finite_diff_check(
        [&](const nn::Tensor& v) { return nn::mse(layer.forward(v, {}), target); }, x);
    CHECK(rx.passed);
  }
}

TEST_CASE("an empty layer stack returns the embedding") {
  auto config = small_backbone(model::BackboneType::kChannelIndependent, 2, true);
  config.layers = 0;
  std::mt19937_64 rng(13);
  model::Backbone bb(config, rng);
  const nn::Tensor x = random_tensor({2, 2, 5, 4}, 25);
  CHECK(bitwise_equal(bb.forward(x, {}), bb.embed(x)));
}

TEST_CASE("CI backbone is exactly channel-permutation equivariant") {
  std::mt19937_64 rng(14);
  model::Backbone bb(small_backbone(model::BackboneType::kChannelIndependent, 4, true), rng);
  const nn::Tensor x = random_tensor({2, 4, 5, 4}, 27);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  CHECK(bitwise_equal(bb.forward(nn::index_select(x, 1, perm), {}), nn::index_select(bb.forward(x, {}), 1, perm)));
}

TEST_CASE("backbone output is deterministic under a seeded dropout stream") {
  auto config = small_backbone(model::BackboneType::kChannelIndependent, 2, true);
  config.dropout = 0.3;
  std::mt19937_64 rng(15);
  model::Backbone bb(config, rng);
  const nn::Tensor x = random_tensor({2, 2, 5, 4}, 29);
  std::mt19937_64 r1(7);
  std::mt19937_64 r2(7);
  CHECK(bitwise_equal(bb.forward(x, {.training = true, .rng = &r1}), bb.forward(x, {.training = true, .rng = &r2})));
  CHECK(bitwise_equal(bb.forward(x, {}), bb.forward(x, {})));
}

TEST_CASE("default backbone parameter count") {
  model::ModelConfig c;
  std::mt19937_64 rng(16);
  model::Backbone bb(c.backbone(), rng);
  // Independent tally: embedding, then per layer a patch block (norm, n->2n->n
  // MLP) and a feature block (norm, hf->ef->hf MLP).
  const std::size_t n = 63, hf = 32, ef = 64, pl = 16;
  const std::size_t embed = pl * hf + hf;
  const std::size_t patch_block = 2 * n + (n * 2 * n + 2 * n) + (2 * n * n + n);
  const std::size_t feature_block = 2 * hf + (hf * ef + ef) + (ef * hf + hf);
  CHECK(bb.parameters().numel() == embed + 8 * (patch_block + feature_block));
  CHECK(bb.parameters().numel() == 164120);
}
