#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "egoexo/error.hpp"

namespace egoexo::nn {

/// Storage aligned to Eigen's widest packet, so vectorized kernels take the
/// same code path (and summation order) regardless of heap layout.
template <class T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

/// Dense NCHW tensor.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(int n, int c, int h, int w, T fill = T(0)) : shape_{n, c, h, w} {
    if (n < 0 || c < 0 || h < 0 || w < 0) fail(ErrorKind::ShapeError, "negative tensor dimension");
    data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
  }

  static Tensor like(const Tensor& o, T fill = T(0)) { return Tensor(o.n(), o.c(), o.h(), o.w(), fill); }

  int n() const noexcept { return shape_[0]; }
  int c() const noexcept { return shape_[1]; }
  int h() const noexcept { return shape_[2]; }
  int w() const noexcept { return shape_[3]; }
  const std::array<int, 4>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(shape_[2]) * shape_[3]; }
  std::size_t sample_size() const noexcept { return plane() * shape_[1]; }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  T* sample(int i) noexcept { return data_.data() + i * sample_size(); }
  const T* sample(int i) const noexcept { return data_.data() + i * sample_size(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  T& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  T at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }

  void reshape(int n, int c, int h, int w) {
    if (static_cast<std::size_t>(n) * c * h * w != data_.size()) fail(ErrorKind::ShapeError, "reshape size mismatch");
    shape_ = {n, c, h, w};
  }

  Tensor& operator+=(const Tensor& o) {
    require_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  void require_same(const Tensor& o) const {
    if (!same_shape(o)) fail(ErrorKind::ShapeError, "tensor shape mismatch: " + shape_string() + " vs " + o.shape_string());
  }

  std::string shape_string() const {
    return "(" + std::to_string(shape_[0]) + "," + std::to_string(shape_[1]) + "," + std::to_string(shape_[2]) + "," +
           std::to_string(shape_[3]) + ")";
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(n(), c(), h(), w());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t index(int n, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }

  std::array<int, 4> shape_{0, 0, 0, 0};
  AlignedVector<T> data_;
};

/// Stacks along channels: (N, Ca, H, W) ++ (N, Cb, H, W).
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) fail(ErrorKind::ShapeError, "concat shape mismatch");
  Tensor<T> out(a.n(), a.c() + b.c(), a.h(), a.w());
  for (int i = 0; i < a.n(); ++i) {
    std::copy_n(a.sample(i), a.sample_size(), out.sample(i));
    std::copy_n(b.sample(i), b.sample_size(), out.sample(i) + a.sample_size());
  }
  return out;
}

/// Inverse of concat_channels: first `ca` channels go to `a`.
template <class T>
void split_channels(const Tensor<T>& x, int ca, Tensor<T>& a, Tensor<T>& b) {
  a = Tensor<T>(x.n(), ca, x.h(), x.w());
  b = Tensor<T>(x.n(), x.c() - ca, x.h(), x.w());
  for (int i = 0; i < x.n(); ++i) {
    std::copy_n(x.sample(i), a.sample_size(), a.sample(i));
    std::copy_n(x.sample(i) + a.sample_size(), b.sample_size(), b.sample(i));
  }
}

/// Stacks single-sample tensors into a batch.
template <class T>
Tensor<T> stack(std::span<const Tensor<T>* const> items) {
  if (items.empty()) return {};
  const auto& f = *items.front();
  Tensor<T> out(static_cast<int>(items.size()), f.c(), f.h(), f.w());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i]->c() != f.c() || items[i]->h() != f.h() || items[i]->w() != f.w() || items[i]->n() != 1) {
      fail(ErrorKind::ShapeError, "cannot stack tensors of different shapes");
    }
    std::copy_n(items[i]->data(), f.sample_size(), out.sample(static_cast<int>(i)));
  }
  return out;
}

template <class T>
Tensor<T> take_sample(const Tensor<T>& x, int i) {
  Tensor<T> out(1, x.c(), x.h(), x.w());
  std::copy_n(x.sample(i), x.sample_size(), out.data());
  return out;
}

}  // namespace egoexo::nn
