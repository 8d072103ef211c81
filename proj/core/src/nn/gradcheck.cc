// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/nn/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "tsmixer/error.h"
#include "tsmixer/nn/tape.h"

namespace tsmixer::nn {
namespace {

double evaluate(const std::function<Tensor()>& loss) {
  NoGradGuard guard;
  Tensor value = loss();
  if (value.numel() != 1) throw ShapeError("finite_diff_check: function must return a scalar");
  return value.item();
}

}  // namespace

GradCheckResult finite_diff_check(const std::function<Tensor()>& loss, const ParameterSet& wrt,
                                  const GradCheckOptions& options) {
  GradCheckResult result;
  Tape::current().clear();
  wrt.zero_grad();
  Tensor value = loss();
  if (value.numel() != 1) throw ShapeError("finite_diff_check: function must return a scalar");
  if (!std::isfinite(value.item())) {
    result.failure = "non-finite function value at the base point";
    return result;
  }
  if (value.requires_grad()) backward(value);
  Tape::current().clear();

  for (const auto& param : wrt.items()) {
    Tensor t = param.value;
    auto data = t.mutable_data();
    const auto grad = t.grad();
    const std::size_t count = data.size();
    const std::size_t limit = options.max_per_tensor == 0 ? count : std::min(count, options.max_per_tensor);
    const std::size_t stride = std::max<std::size_t>(1, count / limit);
    for (std::size_t i = 0; i < count && (i / stride) < limit; i += stride) {
      const double original = data[i];
      data[i] = original + options.step;
      const double plus = evaluate(loss);
      data[i] = original - options.step;
      const double minus = evaluate(loss);
      data[i] = original;
      const std::string where = param.name + "[" + std::to_string(i) + "]";
      const double fd = (plus - minus) / (2.0 * options.step);
      const double ad = grad.empty() ? 0.0 : grad[i];
      if (!std::isfinite(fd) || !std::isfinite(ad)) {
        result.failure = "non-finite gradient at " + where;
        result.passed = false;
        return result;
      }
      const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-8});
      if (rel >= result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = where;
      }
      ++result.checked;
    }
  }
  result.passed = result.max_rel_error < options.tolerance;
  return result;
}

GradCheckResult finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
                                  const GradCheckOptions& options) {
  Tensor leaf = point.clone();
  leaf.set_requires_grad(true);
  ParameterSet wrt;
  wrt.add("x", leaf);
  return finite_diff_check([&]() { return f(leaf); }, wrt, options);
}

}  // namespace tsmixer::nn
