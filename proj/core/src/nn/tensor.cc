// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/nn/tensor.h"

#include <algorithm>
#include <sstream>

#include "tsmixer/error.h"

namespace tsmixer::nn {
namespace {

std::atomic<std::size_t> g_current_bytes{0};
std::atomic<std::size_t> g_peak_bytes{0};

void check_shape(const Shape& shape) {
  for (std::size_t extent : shape) {
    if (extent == 0) throw ShapeError("tensor extents must be positive, got " + to_string(shape));
  }
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t MemoryStats::current_bytes() { return g_current_bytes.load(); }
std::size_t MemoryStats::peak_bytes() { return g_peak_bytes.load(); }
void MemoryStats::reset_peak() { g_peak_bytes.store(g_current_bytes.load()); }

void MemoryStats::on_allocate(std::size_t bytes) {
  std::size_t now = g_current_bytes.fetch_add(bytes) + bytes;
  std::size_t peak = g_peak_bytes.load();
  while (now > peak && !g_peak_bytes.compare_exchange_weak(peak, now)) {
  }
}

void MemoryStats::on_release(std::size_t bytes) { g_current_bytes.fetch_sub(bytes); }

Buffer& TensorImpl::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor::Tensor() : Tensor(Shape{}, 0.0) {}

Tensor::Tensor(Shape shape, double fill, bool requires_grad) : impl_(std::make_shared<TensorImpl>()) {
  check_shape(shape);
  impl_->data.assign(nn::numel(shape), fill);
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<TensorImpl>()) {
  check_shape(shape);
  if (nn::numel(shape) != values.size()) {
    throw ShapeError("shape " + to_string(shape) + " needs " + std::to_string(nn::numel(shape)) +
                     " values, got " + std::to_string(values.size()));
  }
  impl_->data.assign(values.begin(), values.end());
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor(Shape{}, value, requires_grad); }

Tensor Tensor::from(Shape shape, std::initializer_list<double> values) {
  return Tensor(std::move(shape), std::vector<double>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape()));
  }
  return impl_->shape[axis];
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() needs a single-element tensor, got " + to_string(shape()));
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != rank()) throw ShapeError("index rank does not match shape " + to_string(shape()));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= impl_->shape[axis]) throw ShapeError("index out of bounds for shape " + to_string(shape()));
    flat = flat * impl_->shape[axis] + i;
    ++axis;
  }
  return impl_->data[flat];
}

void Tensor::zero_grad() {
  auto& g = impl_->ensure_grad();
  std::fill(g.begin(), g.end(), 0.0);
}

void Tensor::clear_grad() {
  impl_->grad.clear();
  impl_->grad.shrink_to_fit();
}

Tensor Tensor::clone() const {
  Tensor copy(shape(), 0.0, false);
  std::copy(impl_->data.begin(), impl_->data.end(), copy.impl_->data.begin());
  return copy;
}

}  // namespace tsmixer::nn
