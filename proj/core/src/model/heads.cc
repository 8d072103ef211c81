// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/model/heads.h"

#include <algorithm>

#include "tsmixer/error.h"
#include "tsmixer/nn/ops.h"

namespace tsmixer::model {

FlattenHead::FlattenHead(std::size_t patches, std::size_t hidden, std::size_t out_len, std::size_t groups,
                         double dropout, std::mt19937_64& rng)
    : linear_(patches * hidden, out_len * groups, rng), out_len_(out_len), groups_(groups), dropout_(dropout) {}

nn::Tensor FlattenHead::forward(const nn::Tensor& features, const nn::ForwardContext& ctx) const {
  if (features.rank() != 4 || features.dim(2) * features.dim(3) != linear_.in_features()) {
    throw ShapeError("head expects b x c x n x hf with n*hf = " + std::to_string(linear_.in_features()) + ", got " +
                     nn::to_string(features.shape()));
  }
  if (ctx.training && dropout_ > 0.0 && ctx.rng == nullptr) throw ConfigError("training with dropout needs an rng");
  const std::size_t b = features.dim(0);
  const std::size_t rows = features.dim(1);
  std::mt19937_64 unused;
  nn::Tensor flat = nn::reshape(features, nn::Shape{b, rows, linear_.in_features()});
  flat = nn::dropout(flat, dropout_, ctx.training, ctx.rng != nullptr ? *ctx.rng : unused);
  nn::Tensor y = linear_(flat);  // b x rows x (groups * out_len), channel-major
  y = nn::reshape(y, nn::Shape{b, rows * groups_, out_len_});
  return nn::permute(y, {0, 2, 1});
}

void FlattenHead::collect(nn::ParameterSet& out, const std::string& prefix) const {
  linear_.collect(out, prefix + ".linear");
}

HierarchyHead::HierarchyHead(std::size_t horizon, std::size_t patch_len, std::mt19937_64& rng)
    : horizon_(horizon), patch_len_(patch_len) {
  if (patch_len == 0 || horizon % patch_len != 0) {
    throw ConfigError("hierarchy head needs fl divisible by pl (fl=" + std::to_string(horizon) +
                      ", pl=" + std::to_string(patch_len) + ")");
  }
  aggregate_ = nn::Linear(horizon, horizon / patch_len, rng);
  reconcile_ = nn::Linear(patch_len + 1, patch_len, rng);
}

HierarchyOutput HierarchyHead::forward(const nn::Tensor& forecast) const {
  if (forecast.rank() != 3 || forecast.dim(1) != horizon_) {
    throw ShapeError("hierarchy head expects b x " + std::to_string(horizon_) + " x c, got " +
                     nn::to_string(forecast.shape()));
  }
  const std::size_t b = forecast.dim(0);
  const std::size_t c = forecast.dim(2);
  const std::size_t op = output_patches();
  nn::Tensor per_channel = nn::permute(forecast, {0, 2, 1});  // b x c x fl
  nn::Tensor aggregates = aggregate_(per_channel);             // b x c x op
  nn::Tensor patches = nn::reshape(per_channel, nn::Shape{b, c, op, patch_len_});
  nn::Tensor joined = nn::concat({patches, nn::reshape(aggregates, nn::Shape{b, c, op, 1})}, 3);
  nn::Tensor reconciled = nn::add(patches, reconcile_(joined));
  reconciled = nn::permute(nn::reshape(reconciled, nn::Shape{b, c, horizon_}), {0, 2, 1});
  return {reconciled, aggregates};
}

void HierarchyHead::collect(nn::ParameterSet& out, const std::string& prefix) const {
  aggregate_.collect(out, prefix + ".aggregate");
  reconcile_.collect(out, prefix + ".reconcile");
}

CrossChannelHead::CrossChannelHead(std::size_t channels, std::size_t context_length, std::mt19937_64& rng)
    : channels_(channels), context_(context_length) {
  const std::size_t d = flat_width();
  gate_ = nn::Linear(d, d, rng);
  output_ = nn::Linear(d, channels, rng);
}

std::size_t CrossChannelHead::param_count(std::size_t channels, std::size_t context_length) {
  const std::size_t d = channels * (2 * context_length + 1);
  return d * d + d + d * channels + channels;
}

nn::Tensor CrossChannelHead::forward(const nn::Tensor& forecast) const {
  if (forecast.rank() != 3 || forecast.dim(2) != channels_) {
    throw ShapeError("cross-channel head expects b x fl x " + std::to_string(channels_) + ", got " +
                     nn::to_string(forecast.shape()));
  }
  const std::size_t b = forecast.dim(0);
  const std::size_t fl = forecast.dim(1);
  const std::size_t spl = span_len();
  std::vector<std::size_t> positions;
  positions.reserve(fl * spl);
  for (std::size_t t = 0; t < fl; ++t) {
    for (std::size_t k = 0; k < spl; ++k) {
      const auto pos = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(context_);
      positions.push_back(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(pos, 0, static_cast<std::ptrdiff_t>(fl) - 1)));
    }
  }
  nn::Tensor windows = nn::index_select(forecast, 1, positions);                  // b x (fl*spl) x c
  windows = nn::reshape(windows, nn::Shape{b, fl, spl, channels_});
  windows = nn::reshape(nn::permute(windows, {0, 1, 3, 2}), nn::Shape{b, fl, flat_width()});  // channel-major
  nn::Tensor gated = nn::mul(windows, nn::softmax(gate_(windows), 2));
  return nn::add(forecast, output_(gated));
}

void CrossChannelHead::collect(nn::ParameterSet& out, const std::string& prefix) const {
  gate_.collect(out, prefix + ".gate");
  output_.collect(out, prefix + ".output");
}

nn::Tensor bu_aggregate(const nn::Tensor& forecast, std::size_t patch_len) {
  if (forecast.rank() != 3 || patch_len == 0 || forecast.dim(1) % patch_len != 0) {
    throw ShapeError("bu_aggregate: horizon of " + nn::to_string(forecast.shape()) + " not divisible by pl=" +
                     std::to_string(patch_len));
  }
  const std::size_t b = forecast.dim(0);
  const std::size_t c = forecast.dim(2);
  const std::size_t op = forecast.dim(1) / patch_len;
  nn::Tensor per_channel = nn::permute(forecast, {0, 2, 1});
  return nn::sum(nn::reshape(per_channel, nn::Shape{b, c, op, patch_len}), 3);
}

nn::Tensor hier_loss(const nn::Tensor& target, const nn::Tensor& reconciled, const nn::Tensor& aggregates,
                     std::size_t patch_len) {
  if (target.shape() != reconciled.shape()) {
    throw ShapeError("hier_loss: target " + nn::to_string(target.shape()) + " vs forecast " +
                     nn::to_string(reconciled.shape()));
  }
  const double inv_sf = 1.0 / static_cast<double>(patch_len * patch_len);
  nn::Tensor truth_aggregates = bu_aggregate(target, patch_len);
  nn::Tensor aggregate_term = nn::scale(nn::mse(aggregates, truth_aggregates), inv_sf);
  nn::Tensor granular_term = nn::mse(reconciled, target);
  nn::Tensor coherence_term = nn::scale(nn::mse(bu_aggregate(reconciled, patch_len), aggregates), inv_sf);
  return nn::add(nn::add(aggregate_term, granular_term), coherence_term);
}

nn::Tensor masked_mse(const nn::Tensor& target, const nn::Tensor& reconstruction,
                      std::span<const std::uint8_t> mask, std::size_t patch_len) {
  if (target.shape() != reconstruction.shape() || target.rank() != 3) {
    throw ShapeError("masked_mse: target " + nn::to_string(target.shape()) + " vs reconstruction " +
                     nn::to_string(reconstruction.shape()));
  }
  const std::size_t b = target.dim(0);
  const std::size_t sl = target.dim(1);
  const std::size_t c = target.dim(2);
  if (patch_len == 0 || mask.size() % (b * c) != 0) throw ShapeError("masked_mse: mask does not match b x c x n");
  const std::size_t n = mask.size() / (b * c);
  if (n * patch_len > sl) throw ShapeError("masked_mse: mask covers more timesteps than the window");
  nn::Tensor weights(target.shape());
  auto w = weights.mutable_data();
  std::size_t count = 0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t k = 0; k < n; ++k) {
        if (!mask[(i * c + ch) * n + k]) continue;
        for (std::size_t j = 0; j < patch_len; ++j) w[(i * sl + k * patch_len + j) * c + ch] = 1.0;
        count += patch_len;
      }
    }
  }
  if (count == 0) throw ConfigError("masked_mse: no masked patches, nothing to reconstruct");
  nn::Tensor masked_error = nn::mul(nn::sub(reconstruction, target), weights);
  return nn::scale(nn::sum(nn::mul(masked_error, masked_error)), 1.0 / static_cast<double>(count));
}

}  // namespace tsmixer::model
