// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "tsmixer/nn/module.h"

namespace tsmixer::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Upper bound on checked components per tensor (0 = all). Components are
  // taken at an even stride so every region of the tensor is covered.
  std::size_t max_per_tensor = 0;
};

struct GradCheckResult {
  bool passed = false;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;    // "name[index]" of the largest relative error
  std::string failure;  // non-empty when a non-finite value was seen
};

// Compares reverse-mode gradients of the scalar `loss` against central
// differences for every tensor in `wrt`. Relative error per component is
// |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8).
GradCheckResult finite_diff_check(const std::function<Tensor()>& loss, const ParameterSet& wrt,
                                  const GradCheckOptions& options = {});

// Single-point form: f is evaluated at `point` and its perturbations.
GradCheckResult finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
                                  const GradCheckOptions& options = {});

}  // namespace tsmixer::nn
