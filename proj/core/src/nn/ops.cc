// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsmixer/error.h"
#include "tsmixer/nn/tape.h"

namespace tsmixer::nn {
namespace {

using ImplPtr = std::shared_ptr<TensorImpl>;

thread_local std::uint64_t t_macs = 0;

bool wants_grad(std::initializer_list<const Tensor*> inputs) {
  if (!Tape::current().recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

void record(std::string_view op, const Tensor& out, std::vector<ImplPtr> inputs, std::function<void()> fn) {
  out.impl()->requires_grad = true;
  Tape::current().record(TapeEntry{op, out.impl(), std::move(inputs), std::move(fn)});
}

void check_axis(const Tensor& x, std::size_t axis, const char* op) {
  if (axis >= x.rank()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(x.shape()));
  }
}

// Product of extents in [begin, end).
std::size_t extent_product(const Shape& shape, std::size_t begin, std::size_t end) {
  std::size_t n = 1;
  for (std::size_t i = begin; i < end; ++i) n *= shape[i];
  return n;
}

// C[m,n] += sum_k A[m,k] B[k,n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// A[m,k] += sum_n C[m,n] B[k,n]
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* c, const double* b, double* a) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* crow = c + i * n;
    double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += crow[j] * brow[j];
      arow[p] += acc;
    }
  }
}

// B[k,n] += sum_m A[m,k] C[m,n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* c, double* b) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) brow[j] += av * crow[j];
    }
  }
}

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i + a.size() >= rank ? a[i + a.size() - rank] : 1;
    const std::size_t db = i + b.size() >= rank ? b[i + b.size() - rank] : 1;
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast shapes " + to_string(a) + " and " + to_string(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// Strides of `in` aligned to `out`, zero along broadcast axes.
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  const auto own = strides_of(in);
  const std::size_t offset = out.size() - in.size();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] != 1) strides[i + offset] = own[i];
  }
  return strides;
}

// Calls f(out_index, a_index, b_index) for every element of the broadcast result.
template <class F>
void for_each_broadcast(const Shape& out, const Shape& a, const Shape& b, F&& f) {
  const std::size_t total = numel(out);
  if (a == out && b == out) {
    for (std::size_t i = 0; i < total; ++i) f(i, i, i);
    return;
  }
  const std::size_t nb = numel(b);
  if (a == out && b.size() <= out.size() && std::equal(b.begin(), b.end(), out.end() - b.size())) {
    for (std::size_t i = 0; i < total; ++i) f(i, i, i % nb);
    return;
  }
  const auto sa = broadcast_strides(a, out);
  const auto sb = broadcast_strides(b, out);
  const std::size_t rank = out.size();
  std::vector<std::size_t> index(rank, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t i = 0; i < total; ++i) {
    f(i, ia, ib);
    for (std::size_t d = rank; d-- > 0;) {
      ++index[d];
      ia += sa[d];
      ib += sb[d];
      if (index[d] < out[d]) break;
      ia -= sa[d] * out[d];
      ib -= sb[d] * out[d];
      index[d] = 0;
    }
  }
}

enum class BinaryKind { kAdd, kSub, kMul };

Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind, const char* op) {
  const Shape out_shape = broadcast_shape(a.shape(), b.shape(), op);
  Tensor out(out_shape);
  auto o = out.mutable_data();
  auto ad = a.data();
  auto bd = b.data();
  switch (kind) {
    case BinaryKind::kAdd:
      for_each_broadcast(out_shape, a.shape(), b.shape(),
                         [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = ad[ia] + bd[ib]; });
      break;
    case BinaryKind::kSub:
      for_each_broadcast(out_shape, a.shape(), b.shape(),
                         [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = ad[ia] - bd[ib]; });
      break;
    case BinaryKind::kMul:
      for_each_broadcast(out_shape, a.shape(), b.shape(),
                         [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = ad[ia] * bd[ib]; });
      break;
  }
  if (wants_grad({&a, &b})) {
    ImplPtr pa = a.impl(), pb = b.impl(), po = out.impl();
    record(op, out, {pa, pb}, [pa, pb, po, kind]() {
      const auto& g = po->grad;
      const bool need_a = pa->requires_grad;
      const bool need_b = pb->requires_grad;
      double* ga = need_a ? pa->ensure_grad().data() : nullptr;
      double* gb = need_b ? pb->ensure_grad().data() : nullptr;
      const double* av = pa->data.data();
      const double* bv = pb->data.data();
      for_each_broadcast(po->shape, pa->shape, pb->shape, [&](std::size_t i, std::size_t ia, std::size_t ib) {
        switch (kind) {
          case BinaryKind::kAdd:
            if (ga) ga[ia] += g[i];
            if (gb) gb[ib] += g[i];
            break;
          case BinaryKind::kSub:
            if (ga) ga[ia] += g[i];
            if (gb) gb[ib] -= g[i];
            break;
          case BinaryKind::kMul:
            if (ga) ga[ia] += g[i] * bv[ib];
            if (gb) gb[ib] += g[i] * av[ia];
            break;
        }
      });
    });
  }
  return out;
}

Tensor permute_impl(const Tensor& x, const std::vector<std::size_t>& perm) {
  const std::size_t rank = x.rank();
  if (perm.size() != rank) {
    throw ShapeError("permute: permutation of length " + std::to_string(perm.size()) + " for shape " +
                     to_string(x.shape()));
  }
  std::vector<bool> seen(rank, false);
  for (std::size_t p : perm) {
    if (p >= rank || seen[p]) throw ShapeError("permute: invalid permutation for shape " + to_string(x.shape()));
    seen[p] = true;
  }
  Shape out_shape(rank);
  const auto in_strides = strides_of(x.shape());
  std::vector<std::size_t> src_strides(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = x.shape()[perm[i]];
    src_strides[i] = in_strides[perm[i]];
  }
  // Source offset for every destination element, shared by forward and backward.
  auto offsets = std::make_shared<std::vector<std::size_t>>(x.numel());
  {
    std::vector<std::size_t> index(rank, 0);
    std::size_t src = 0;
    for (std::size_t i = 0; i < offsets->size(); ++i) {
      (*offsets)[i] = src;
      for (std::size_t d = rank; d-- > 0;) {
        ++index[d];
        src += src_strides[d];
        if (index[d] < out_shape[d]) break;
        src -= src_strides[d] * out_shape[d];
        index[d] = 0;
      }
    }
  }
  Tensor out(out_shape);
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[(*offsets)[i]];
  if (wants_grad({&x})) {
    ImplPtr px = x.impl(), po = out.impl();
    record("permute", out, {px}, [px, po, offsets]() {
      auto& gx = px->ensure_grad();
      const auto& g = po->grad;
      for (std::size_t i = 0; i < g.size(); ++i) gx[(*offsets)[i]] += g[i];
    });
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw ShapeError("matmul: operands need rank >= 2, got " + to_string(a.shape()) + " and " +
                     to_string(b.shape()));
  }
  const std::size_t k = a.shape().back();
  const bool shared_rhs = b.rank() == 2;
  if (!shared_rhs) {
    const bool same_batch = a.rank() == b.rank() &&
                            std::equal(a.shape().begin(), a.shape().end() - 2, b.shape().begin());
    if (!same_batch) {
      throw ShapeError("matmul: batch extents differ between " + to_string(a.shape()) + " and " +
                       to_string(b.shape()));
    }
  }
  if (b.shape()[b.rank() - 2] != k) {
    throw ShapeError("matmul: inner extents differ between " + to_string(a.shape()) + " and " +
                     to_string(b.shape()));
  }
  const std::size_t n = b.shape().back();
  Shape out_shape = a.shape();
  out_shape.back() = n;
  Tensor out(out_shape);

  // Shared rhs: fold every leading axis of `a` into one row dimension.
  const std::size_t batches = shared_rhs ? 1 : extent_product(a.shape(), 0, a.rank() - 2);
  const std::size_t m = shared_rhs ? a.numel() / k : a.shape()[a.rank() - 2];
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.mutable_data().data();
  for (std::size_t bi = 0; bi < batches; ++bi) {
    gemm_nn(m, k, n, ad + bi * m * k, bd + (shared_rhs ? 0 : bi * k * n), od + bi * m * n);
  }
  t_macs += static_cast<std::uint64_t>(batches) * m * k * n;

  if (wants_grad({&a, &b})) {
    ImplPtr pa = a.impl(), pb = b.impl(), po = out.impl();
    record("matmul", out, {pa, pb}, [pa, pb, po, batches, m, k, n, shared_rhs]() {
      const double* g = po->grad.data();
      for (std::size_t bi = 0; bi < batches; ++bi) {
        const std::size_t boff = shared_rhs ? 0 : bi * k * n;
        if (pa->requires_grad) {
          gemm_nt(m, k, n, g + bi * m * n, pb->data.data() + boff, pa->ensure_grad().data() + bi * m * k);
        }
        if (pb->requires_grad) {
          gemm_tn(m, k, n, pa->data.data() + bi * m * k, g + bi * m * n, pb->ensure_grad().data() + boff);
        }
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kAdd, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kSub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kMul, "mul"); }

Tensor scale(const Tensor& x, double factor) {
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] * factor;
  if (wants_grad({&x})) {
    ImplPtr px = x.impl(), po = out.impl();
    record("scale", out, {px}, [px, po, factor]() {
      auto& gx = px->ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += po->grad[i] * factor;
    });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = 0.5 * in[i] * (1.0 + std::erf(in[i] * kInvSqrt2));
  if (wants_grad({&x})) {
    ImplPtr px = x.impl(), po = out.impl();
    record("gelu", out, {px}, [px, po]() {
      auto& gx = px->ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        const double v = px->data[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        gx[i] += po->grad[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  auto in = x.data();
  Tensor out = Tensor::scalar(std::accumulate(in.begin(), in.end(), 0.0));
  if (wants_grad({&x})) {
    ImplPtr px = x.impl(), po = out.impl();
    record("sum", out, {px}, [px, po]() {
      auto& gx = px->ensure_grad();
      const double g = po->grad[0];
      for (double& v : gx) v += g;
    });
  }
  return out;
}

Tensor sum(const Tensor& x, std::size_t axis) {
  check_axis(x, axis, "sum");
  const std::size_t outer = extent_product(x.shape(), 0, axis);
  const std::size_t len = x.shape()[axis];
  const std::size_t inner = extent_product(x.shape(), axis + 1, x.rank());
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(out_shape);
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t p = 0; p < outer; ++p) {
    for (std::size_t a = 0; a < len; ++a) {
      for (std::size_t q = 0; q < inner; ++q) o[p * inner + q] += in[(p * len + a) * inner + q];
    }
  }
  if (wants_grad({&x})) {
    ImplPtr px = x.impl(), po = out.impl();
    record("sum_axis", out, {px}, [px, po, outer, len, inner]() {
      auto& gx = px->ensure_grad();
      for (std::size_t p = 0; p < outer; ++p) {
        for (std::size_t a = 0; a < len; ++a) {
          for (std::size_t q = 0; q < inner; ++q) gx[(p * len + a) * inner + q] += po->grad[p * inner + q];
        }
      }
    });
  }
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  Tensor out(std::move(shape), x.to_vector());
  if (wants_grad({&x})) {
    ImplPtr px = x.impl(), po = out.impl();
    record("reshape", out, {px}, [px, po]() {
      auto& gx = px->ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += po->grad[i];
    });
  }
  return out;
}

Tensor permute(const Tensor& x, std::span<const std::size_t> perm) {
  return permute_impl(x, std::vector<std::size_t>(perm.begin(), perm.end()));
}

Tensor permute(const Tensor& x, std::initializer_list<std::size_t> perm) {
  return permute_impl(x, std::vector<std::size_t>(perm));
}

Tensor transpose(const Tensor& x, std::size_t axis_a, std::size_t axis_b) {
  check_axis(x, axis_a, "transpose");
  check_axis(x, axis_b, "transpose");
  std::vector<std::size_t> perm(x.rank());
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[axis_a], perm[axis_b]);
  return permute_impl(x, perm);
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Tensor& first = parts.front();
  check_axis(first, axis, "concat");
  Shape out_shape = first.shape();
  out_shape[axis] = 0;
  for (const Tensor& part : parts) {
    bool compatible = part.rank() == first.rank();
    for (std::size_t d = 0; compatible && d < part.rank(); ++d) {
      if (d != axis && part.shape()[d] != first.shape()[d]) compatible = false;
    }
    if (!compatible) {
      throw ShapeError("concat: shapes " + to_string(first.shape()) + " and " + to_string(part.shape()) +
                       " differ off axis " + std::to_string(axis));
    }
    out_shape[axis] += part.shape()[axis];
  }
  const std::size_t outer = extent_product(out_shape, 0, axis);
  const std::size_t inner = extent_product(out_shape, axis + 1, out_shape.size());
  const std::size_t out_row = out_shape[axis] * inner;
  Tensor out(out_shape);
  auto o = out.mutable_data();
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& part : parts) {
    offsets.push_back(offset);
    const std::size_t row = part.shape()[axis] * inner;
    auto in = part.data();
    for (std::size_t p = 0; p < outer; ++p) {
      std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(p * row), row,
                  o.begin() + static_cast<std::ptrdiff_t>(p * out_row + offset));
    }
    offset += row;
  }
  bool any_grad = false;
  for (const Tensor& part : parts) any_grad = any_grad || part.requires_grad();
  if (any_grad && Tape::current().recording()) {
    std::vector<ImplPtr> inputs;
    for (const Tensor& part : parts) inputs.push_back(part.impl());
    ImplPtr po = out.impl();
    record("concat", out, inputs, [inputs, po, offsets, outer, out_row, inner, axis]() {
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& pi = inputs[i];
        if (!pi->requires_grad) continue;
        auto& gi = pi->ensure_grad();
        const std::size_t row = pi->shape[axis] * inner;
        for (std::size_t p = 0; p < outer; ++p) {
          for (std::size_t j = 0; j < row; ++j) gi[p * row + j] += po->grad[p * out_row + offsets[i] + j];
        }
      }
    });
  }
  return out;
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  check_axis(x, axis, "slice");
  if (length == 0 || start + length > x.shape()[axis]) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") invalid for axis " + std::to_string(axis) + " of " + to_string(x.shape()));
  }
  std::vector<std::size_t> indices(length);
  std::iota(indices.begin(), indices.end(), start);
  return index_select(x, axis, indices);
}

Tensor index_select(const Tensor& x, std::size_t axis, std::span<const std::size_t> indices) {
  check_axis(x, axis, "index_select");
  if (indices.empty()) throw ShapeError("index_select: empty index list");
  const std::size_t len = x.shape()[axis];
  for (std::size_t idx : indices) {
    if (idx >= len) {
      throw ShapeError("index_select: index " + std::to_string(idx) + " out of range for axis " +
                       std::to_string(axis) + " of " + to_string(x.shape()));
    }
  }
  const std::size_t outer = extent_product(x.shape(), 0, axis);
  const std::size_t inner = extent_product(x.shape(), axis + 1, x.rank());
  Shape out_shape = x.shape();
  out_shape[axis] = indices.size();
  Tensor out(out_shape);
  auto o = out.mutable_data();
  auto in = x.data();
  const std::size_t count = indices.size();
  for (std::size_t p = 0; p < outer; ++p) {
    for (std::size_t a = 0; a < count; ++a) {
      std::copy_n(in.begin() + static_cast<std::ptrdiff_t>((p * len + indices[a]) * inner), inner,
                  o.begin() + static_cast<std::ptrdiff_t>((p * count + a) * inner));
    }
  }
  if (wants_grad({&x})) {
    ImplPtr px = x.impl(), po = out.impl();
    auto idx = std::make_shared<std::vector<std::size_t>>(indices.begin(), indices.end());
    record("index_select", out, {px}, [px, po, idx, outer, len, inner]() {
      auto& gx = px->ensure_grad();
      const std::size_t count = idx->size();
      for (std::size_t p = 0; p < outer; ++p) {
        for (std::size_t a = 0; a < count; ++a) {
          const std::size_t src = (p * len + (*idx)[a]) * inner;
          const std::size_t dst = (p * count + a) * inner;
          for (std::size_t q = 0; q < inner; ++q) gx[src + q] += po->grad[dst + q];
        }
      }
    });
  }
  return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  check_axis(x, axis, "softmax");
  const std::size_t outer = extent_product(x.shape(), 0, axis);
  const std::size_t len = x.shape()[axis];
  const std::size_t inner = extent_product(x.shape(), axis + 1, x.rank());
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t p = 0; p < outer; ++p) {
    for (std::size_t q = 0; q < inner; ++q) {
      const std::size_t base = p * len * inner + q;
      double peak = in[base];
      for (std::size_t a = 1; a < len; ++a) peak = std::max(peak, in[base + a * inner]);
      double total = 0.0;
      for (std::size_t a = 0; a < len; ++a) {
        const double e = std::exp(in[base + a * inner] - peak);
        o[base + a * inner] = e;
        total += e;
      }
      for (std::size_t a = 0; a < len; ++a) o[base + a * inner] /= total;
    }
  }
  if (wants_grad({&x})) {
    ImplPtr px = x.impl(), po = out.impl();
    record("softmax", out, {px}, [px, po, outer, len, inner]() {
      auto& gx = px->ensure_grad();
      const auto& y = po->data;
      const auto& g = po->grad;
      for (std::size_t p = 0; p < outer; ++p) {
        for (std::size_t q = 0; q < inner; ++q) {
          const std::size_t base = p * len * inner + q;
          double dot = 0.0;
          for (std::size_t a = 0; a < len; ++a) dot += g[base + a * inner] * y[base + a * inner];
          for (std::size_t a = 0; a < len; ++a) {
            const std::size_t i = base + a * inner;
            gx[i] += y[i] * (g[i] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor layernorm(const Tensor& x, double eps) {
  if (x.rank() == 0) throw ShapeError("layernorm: needs rank >= 1");
  const std::size_t len = x.shape().back();
  const std::size_t rows = x.numel() / len;
  Tensor out(x.shape());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * len;
    double mu = 0.0;
    for (std::size_t i = 0; i < len; ++i) mu += row[i];
    mu /= static_cast<double>(len);
    double var = 0.0;
    for (std::size_t i = 0; i < len; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<double>(len);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = inv;
    for (std::size_t i = 0; i < len; ++i) o[r * len + i] = (row[i] - mu) * inv;
  }
  if (wants_grad({&x})) {
    ImplPtr px = x.impl(), po = out.impl();
    record("layernorm", out, {px}, [px, po, rstd, rows, len]() {
      auto& gx = px->ensure_grad();
      const auto& y = po->data;
      const auto& g = po->grad;
      const double inv_len = 1.0 / static_cast<double>(len);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * len;
        double g_mean = 0.0;
        double gy_mean = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
          g_mean += g[base + i];
          gy_mean += g[base + i] * y[base + i];
        }
        g_mean *= inv_len;
        gy_mean *= inv_len;
        for (std::size_t i = 0; i < len; ++i) {
          gx[base + i] += (*rstd)[r] * (g[base + i] - g_mean - y[base + i] * gy_mean);
        }
      }
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw ShapeError("dropout: probability must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  std::bernoulli_distribution keep(1.0 - p);
  for (double& m : *mask) m = keep(rng) ? keep_scale : 0.0;
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] * (*mask)[i];
  if (wants_grad({&x})) {
    ImplPtr px = x.impl(), po = out.impl();
    record("dropout", out, {px}, [px, po, mask]() {
      auto& gx = px->ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += po->grad[i] * (*mask)[i];
    });
  }
  return out;
}

Tensor mse(const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    throw ShapeError("mse: prediction shape " + to_string(prediction.shape()) + " differs from target shape " +
                     to_string(target.shape()));
  }
  auto a = prediction.data();
  auto b = target.data();
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  const double count = static_cast<double>(a.size());
  Tensor out = Tensor::scalar(total / count);
  if (wants_grad({&prediction, &target})) {
    ImplPtr pa = prediction.impl(), pb = target.impl(), po = out.impl();
    record("mse", out, {pa, pb}, [pa, pb, po, count]() {
      const double g = po->grad[0] * 2.0 / count;
      double* ga = pa->requires_grad ? pa->ensure_grad().data() : nullptr;
      double* gb = pb->requires_grad ? pb->ensure_grad().data() : nullptr;
      for (std::size_t i = 0; i < pa->data.size(); ++i) {
        const double d = g * (pa->data[i] - pb->data[i]);
        if (ga) ga[i] += d;
        if (gb) gb[i] -= d;
      }
    });
  }
  return out;
}

MacCounter::MacCounter() : start_(t_macs) {}
MacCounter::~MacCounter() = default;
std::uint64_t MacCounter::count() const { return t_macs - start_; }

}  // namespace tsmixer::nn
