// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tsmixer/nn/tensor.h"

namespace tsmixer::nn {

struct Parameter {
  std::string name;
  Tensor value;
};

// Ordered collection of uniquely named parameters. Entries alias the
// module-owned tensors, so updates through the set are seen by the module.
class ParameterSet {
 public:
  void add(std::string name, const Tensor& value);
  void extend(const ParameterSet& other);

  std::span<const Parameter> items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  // Total element count over all parameters.
  std::size_t numel() const;
  const Parameter* find(std::string_view name) const;

  void zero_grad() const;
  void set_requires_grad(bool value) const;

  // Deep copy of every value, in order.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values) const;
  // FNV-1a over the raw bytes of every value; used for freeze checks.
  std::uint64_t fingerprint() const;

 private:
  std::vector<Parameter> items_;
};

// Forward-pass switches shared by every module call.
struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // required when training with dropout > 0
};

// Affine map over the last axis: y = x W + b with W stored as [in, out].
// Weights draw from U(-1/sqrt(in), 1/sqrt(in)); the bias starts at zero.
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in_features, std::size_t out_features, std::mt19937_64& rng);

  Tensor operator()(const Tensor& x) const;
  void collect(ParameterSet& out, const std::string& prefix) const;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  std::size_t param_count() const { return in_ * out_ + out_; }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Tensor weight_;
  Tensor bias_;
};

// Layer normalization over the last axis with learnable scale and shift.
class LayerNorm {
 public:
  static constexpr double kEps = 1e-5;

  LayerNorm() = default;
  explicit LayerNorm(std::size_t features);

  Tensor operator()(const Tensor& x) const;
  void collect(ParameterSet& out, const std::string& prefix) const;

  std::size_t features() const { return features_; }
  Tensor& scale() { return scale_; }
  Tensor& shift() { return shift_; }

 private:
  std::size_t features_ = 0;
  Tensor scale_;
  Tensor shift_;
};

}  // namespace tsmixer::nn
