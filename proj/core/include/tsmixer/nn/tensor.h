// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tsmixer::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::vector<std::size_t> strides_of(const Shape& shape);
std::string to_string(const Shape& shape);

// Byte counters for every tensor buffer (data and grad) alive in the process.
class MemoryStats {
 public:
  static std::size_t current_bytes();
  static std::size_t peak_bytes();
  // Sets the peak watermark to the current footprint.
  static void reset_peak();

  static void on_allocate(std::size_t bytes);
  static void on_release(std::size_t bytes);
};

template <class T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() = default;
  template <class U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    MemoryStats::on_allocate(n * sizeof(T));
    return std::allocator<T>{}.allocate(n);
  }
  void deallocate(T* p, std::size_t n) noexcept {
    MemoryStats::on_release(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  friend bool operator==(const TrackingAllocator&, const TrackingAllocator&) { return true; }
};

using Buffer = std::vector<double, TrackingAllocator<double>>;

struct TensorImpl {
  Shape shape;
  Buffer data;
  Buffer grad;  // empty until a gradient is accumulated
  bool requires_grad = false;

  Buffer& ensure_grad();
};

// Dense row-major array of doubles with an optional gradient buffer.
//
// Tensor is a shared handle: copies alias the same storage. Use clone() for
// an independent copy. A rank-0 tensor (empty shape) holds one scalar.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::initializer_list<double> values);

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;
  std::vector<double> to_vector() const { return {impl_->data.begin(), impl_->data.end()}; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad() { return impl_->ensure_grad(); }
  // Allocates (if needed) and zero-fills the gradient buffer.
  void zero_grad();
  void clear_grad();

  // Independent copy of the values, detached from any recorded graph.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

}  // namespace tsmixer::nn
