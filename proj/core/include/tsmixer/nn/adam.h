// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "tsmixer/nn/module.h"

namespace tsmixer::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Parameters whose requires_grad flag is off are
// skipped entirely (their moments and step counts stay put), which is how
// frozen backbones are expressed.
class Adam {
 public:
  Adam(ParameterSet params, AdamOptions options = {});

  // Throws if a trainable parameter has no gradient buffer.
  void step();
  void zero_grad() const { params_.zero_grad(); }

  double lr() const { return options_.lr; }
  void set_lr(double lr) { options_.lr = lr; }
  std::size_t step_count() const { return steps_; }
  const ParameterSet& params() const { return params_; }

 private:
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
    std::size_t steps = 0;
  };

  ParameterSet params_;
  AdamOptions options_;
  std::vector<Moments> moments_;
  std::size_t steps_ = 0;
};

}  // namespace tsmixer::nn
