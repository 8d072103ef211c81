// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/nn/module.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "tsmixer/error.h"
#include "tsmixer/nn/ops.h"

namespace tsmixer::nn {

void ParameterSet::add(std::string name, const Tensor& value) {
  if (find(name) != nullptr) throw ConfigError("duplicate parameter name '" + name + "'");
  items_.push_back(Parameter{std::move(name), value});
}

void ParameterSet::extend(const ParameterSet& other) {
  for (const auto& p : other.items()) add(p.name, p.value);
}

std::size_t ParameterSet::numel() const {
  std::size_t total = 0;
  for (const auto& p : items_) total += p.value.numel();
  return total;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const Parameter& p) { return p.name == name; });
  return it == items_.end() ? nullptr : &*it;
}

void ParameterSet::zero_grad() const {
  for (const auto& p : items_) {
    Tensor t = p.value;
    t.zero_grad();
  }
}

void ParameterSet::set_requires_grad(bool value) const {
  for (const auto& p : items_) {
    Tensor t = p.value;
    t.set_requires_grad(value);
  }
}

std::vector<std::vector<double>> ParameterSet::snapshot() const {
  std::vector<std::vector<double>> values;
  values.reserve(items_.size());
  for (const auto& p : items_) values.push_back(p.value.to_vector());
  return values;
}

void ParameterSet::restore(const std::vector<std::vector<double>>& values) const {
  if (values.size() != items_.size()) throw ShapeError("restore: snapshot has a different parameter count");
  for (std::size_t i = 0; i < items_.size(); ++i) {
    Tensor t = items_[i].value;
    if (values[i].size() != t.numel()) throw ShapeError("restore: size mismatch for '" + items_[i].name + "'");
    std::copy(values[i].begin(), values[i].end(), t.mutable_data().begin());
  }
}

std::uint64_t ParameterSet::fingerprint() const {
  std::uint64_t hash = 1469598103934665603ULL;
  for (const auto& p : items_) {
    for (double v : p.value.data()) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char byte : bytes) {
        hash ^= byte;
        hash *= 1099511628211ULL;
      }
    }
  }
  return hash;
}

Linear::Linear(std::size_t in_features, std::size_t out_features, std::mt19937_64& rng)
    : in_(in_features),
      out_(out_features),
      weight_(Shape{in_features, out_features}, 0.0, true),
      bias_(Shape{out_features}, 0.0, true) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : weight_.mutable_data()) w = dist(rng);
}

Tensor Linear::operator()(const Tensor& x) const {
  if (x.rank() == 0 || x.shape().back() != in_) {
    throw ShapeError("linear: expected last extent " + std::to_string(in_) + ", got shape " + to_string(x.shape()));
  }
  Tensor flat = x.rank() == 1 ? reshape(x, Shape{1, in_}) : x;
  Tensor y = add(matmul(flat, weight_), bias_);
  return x.rank() == 1 ? reshape(y, Shape{out_}) : y;
}

void Linear::collect(ParameterSet& out, const std::string& prefix) const {
  out.add(prefix + ".weight", weight_);
  out.add(prefix + ".bias", bias_);
}

LayerNorm::LayerNorm(std::size_t features)
    : features_(features), scale_(Shape{features}, 1.0, true), shift_(Shape{features}, 0.0, true) {}

Tensor LayerNorm::operator()(const Tensor& x) const {
  if (x.rank() == 0 || x.shape().back() != features_) {
    throw ShapeError("layernorm: expected last extent " + std::to_string(features_) + ", got shape " +
                     to_string(x.shape()));
  }
  return add(mul(layernorm(x, kEps), scale_), shift_);
}

void LayerNorm::collect(ParameterSet& out, const std::string& prefix) const {
  out.add(prefix + ".scale", scale_);
  out.add(prefix + ".shift", shift_);
}

}  // namespace tsmixer::nn
