// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/data/revin.h"

#include <cmath>

#include "tsmixer/error.h"
#include "tsmixer/nn/ops.h"

namespace tsmixer::data {
namespace {

void check_layout(const nn::Tensor& x, const RevinStats& stats, const char* op) {
  if (x.rank() != 3 || stats.mean.rank() != 3 || x.dim(0) != stats.mean.dim(0) || x.dim(2) != stats.mean.dim(2)) {
    throw ShapeError(std::string(op) + ": values " + nn::to_string(x.shape()) + " incompatible with stats " +
                     nn::to_string(stats.mean.shape()));
  }
}

nn::Tensor denominator(const RevinStats& stats) {
  nn::Tensor out = stats.stdev.clone();
  for (double& v : out.mutable_data()) v += kRevinEps;
  return out;
}

}  // namespace

std::pair<nn::Tensor, RevinStats> revin_normalize(const nn::Tensor& inputs) {
  if (inputs.rank() != 3) throw ShapeError("revin_normalize: expected b x sl x c, got " + nn::to_string(inputs.shape()));
  const std::size_t b = inputs.dim(0);
  const std::size_t sl = inputs.dim(1);
  const std::size_t c = inputs.dim(2);
  if (sl < 2) throw ShapeError("revin_normalize: need sl >= 2");
  RevinStats stats{nn::Tensor(nn::Shape{b, 1, c}), nn::Tensor(nn::Shape{b, 1, c})};
  nn::Tensor out(inputs.shape());
  auto x = inputs.data();
  auto mean = stats.mean.mutable_data();
  auto stdev = stats.stdev.mutable_data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double total = 0.0;
      for (std::size_t t = 0; t < sl; ++t) total += x[(i * sl + t) * c + ch];
      const double mu = total / static_cast<double>(sl);
      double sq = 0.0;
      for (std::size_t t = 0; t < sl; ++t) {
        const double d = x[(i * sl + t) * c + ch] - mu;
        sq += d * d;
      }
      const double sd = std::sqrt(sq / static_cast<double>(sl));
      mean[i * c + ch] = mu;
      stdev[i * c + ch] = sd;
      for (std::size_t t = 0; t < sl; ++t) y[(i * sl + t) * c + ch] = (x[(i * sl + t) * c + ch] - mu) / (sd + kRevinEps);
    }
  }
  return {out, stats};
}

nn::Tensor revin_apply(const nn::Tensor& values, const RevinStats& stats) {
  check_layout(values, stats, "revin_apply");
  nn::Tensor out(values.shape());
  const std::size_t b = values.dim(0), len = values.dim(1), c = values.dim(2);
  auto x = values.data();
  auto y = out.mutable_data();
  auto mean = stats.mean.data();
  auto stdev = stats.stdev.data();
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t k = (i * len + t) * c + ch;
        y[k] = (x[k] - mean[i * c + ch]) / (stdev[i * c + ch] + kRevinEps);
      }
    }
  }
  return out;
}

nn::Tensor revin_denormalize(const nn::Tensor& outputs, const RevinStats& stats) {
  check_layout(outputs, stats, "revin_denormalize");
  return nn::add(nn::mul(outputs, denominator(stats)), stats.mean);
}

nn::Tensor revin_denormalize_aggregates(const nn::Tensor& aggregates, const RevinStats& stats, std::size_t patch_len) {
  if (aggregates.rank() != 3 || aggregates.dim(0) != stats.mean.dim(0) || aggregates.dim(1) != stats.mean.dim(2)) {
    throw ShapeError("revin_denormalize_aggregates: aggregates " + nn::to_string(aggregates.shape()) +
                     " incompatible with stats " + nn::to_string(stats.mean.shape()));
  }
  const nn::Shape column{stats.mean.dim(0), stats.mean.dim(2), 1};
  nn::Tensor scale_col(column, denominator(stats).to_vector());
  nn::Tensor shift_col(column, stats.mean.to_vector());
  for (double& v : shift_col.mutable_data()) v *= static_cast<double>(patch_len);
  return nn::add(nn::mul(aggregates, scale_col), shift_col);
}

}  // namespace tsmixer::data
