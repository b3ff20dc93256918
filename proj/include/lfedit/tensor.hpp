// Copyright 2026 The lfedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace lfedit {

/// Storage aligned to 64 bytes. Vectorized reductions peel a head that
/// depends on the start address, so a fixed alignment keeps results
/// bit-identical from run to run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense NCHW array. Batch is the outermost axis; each (n, c) plane is
/// row-major with `width` contiguous samples per row.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  BasicTensor(int n, int c, int h, int w, T fill = T{})
      : n_(n), c_(c), h_(h), w_(w),
        data_(static_cast<std::size_t>(n) * c * h * w, fill) {}

  template <typename U>
  static BasicTensor cast(const BasicTensor<U>& other) {
    BasicTensor out(other.batch(), other.channels(), other.height(), other.width());
    std::transform(other.data(), other.data() + other.size(), out.data(),
                   [](U v) { return static_cast<T>(v); });
    return out;
  }

  int batch() const { return n_; }
  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  std::array<int, 4> shape() const { return {n_, c_, h_, w_}; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(h_) * w_; }
  std::size_t sample_size() const { return plane_size() * c_; }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
  const T* plane(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }

  T& operator()(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  const T& operator()(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

  bool same_shape(const BasicTensor& o) const { return shape() == o.shape(); }
  template <typename U>
  bool same_shape(const BasicTensor<U>& o) const { return shape() == o.shape(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Copy of samples [begin, begin + count).
  BasicTensor slice_batch(int begin, int count) const {
    BasicTensor out(count, c_, h_, w_);
    std::copy_n(data_.data() + static_cast<std::size_t>(begin) * sample_size(),
                static_cast<std::size_t>(count) * sample_size(), out.data());
    return out;
  }

  /// Same storage, reinterpreted shape. Element count must match.
  BasicTensor reshaped(int n, int c, int h, int w) const& {
    BasicTensor out = *this;
    out.n_ = n, out.c_ = c, out.h_ = h, out.w_ = w;
    return out;
  }

  bool operator==(const BasicTensor&) const = default;

 private:
  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x;
  }

  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  AlignedVector<T> data_;
};

using Tensor = BasicTensor<float>;

inline std::string shape_string(const std::array<int, 4>& s) {
  return "[" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," +
         std::to_string(s[2]) + "," + std::to_string(s[3]) + "]";
}

}  // namespace lfedit
