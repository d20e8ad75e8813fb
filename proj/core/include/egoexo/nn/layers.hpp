#pragma once

#include <Eigen/Core>

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "egoexo/nn/tensor.hpp"

namespace egoexo::nn {

/// Parameter groups; fine-tuning freezes whole groups.
enum class ParamGroup { conv, norm, head };

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  ParamGroup group = ParamGroup::conv;

  Parameter(std::string n, Tensor<T> v, ParamGroup g)
      : name(std::move(n)), value(std::move(v)), grad(Tensor<T>::like(value)), group(g) {}
};

/// Non-trainable state that still belongs in a checkpoint.
template <class T>
struct Buffer {
  std::string name;
  Tensor<T>* value;
};

/// Layer with an explicit backward pass. `infer` is const and reentrant;
/// `forward` additionally caches what `backward` needs and applies
/// training-mode behavior.
template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> infer(const Tensor<T>& x) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  /// Accumulates parameter gradients and returns d(loss)/d(input).
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual void collect(std::vector<Parameter<T>*>&) {}
  virtual void collect_buffers(std::vector<Buffer<T>>&) {}
};

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

namespace detail {

struct ConvGeometry {
  int channels, in_h, in_w, kernel, stride, pad, out_h, out_w;
};

// col[(c*k + ki)*k + kj][oy*out_w + ox] = img[c][oy*s - p + ki][ox*s - p + kj]
template <class T>
void im2col(const T* img, const ConvGeometry& g, T* col) {
  const int cols = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < g.kernel; ++ki) {
      for (int kj = 0; kj < g.kernel; ++kj) {
        T* row = col + static_cast<std::size_t>((c * g.kernel + ki) * g.kernel + kj) * cols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill_n(dst, g.out_w, T(0));
            continue;
          }
          const T* src = img + (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            dst[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const T* col, const ConvGeometry& g, T* img) {
  const int cols = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < g.kernel; ++ki) {
      for (int kj = 0; kj < g.kernel; ++kj) {
        const T* row = col + static_cast<std::size_t>((c * g.kernel + ki) * g.kernel + kj) * cols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.in_h) continue;
          T* dst = img + (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w;
          const T* src = row + oy * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Weight initialization: N(0, std), or He-normal when std <= 0.
template <class T>
void init_normal(Tensor<T>& w, std::mt19937_64& rng, double std_dev, int fan_in) {
  if (std_dev <= 0.0) std_dev = std::sqrt(2.0 / std::max(1, fan_in));
  std::normal_distribution<double> d(0.0, std_dev);
  for (auto& v : w.values()) v = static_cast<T>(d(rng));
}

template <class T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(const std::string& name, int in, int out, int kernel, int stride, int pad, std::mt19937_64& rng,
         double init_std = 0.02, ParamGroup group = ParamGroup::conv)
      : in_(in), out_(out), k_(kernel), s_(stride), p_(pad),
        weight_(name + ".weight", Tensor<T>(out, in, kernel, kernel), group),
        bias_(name + ".bias", Tensor<T>(1, out, 1, 1), group) {
    init_normal(weight_.value, rng, init_std, in * kernel * kernel);
  }

  detail::ConvGeometry geometry(const Tensor<T>& x) const {
    if (x.c() != in_) fail(ErrorKind::ShapeError, weight_.name + ": expected " + std::to_string(in_) + " channels, got " + std::to_string(x.c()));
    const int oh = (x.h() + 2 * p_ - k_) / s_ + 1;
    const int ow = (x.w() + 2 * p_ - k_) / s_ + 1;
    if (oh <= 0 || ow <= 0) fail(ErrorKind::ShapeError, weight_.name + ": input too small");
    return {in_, x.h(), x.w(), k_, s_, p_, oh, ow};
  }

  Tensor<T> infer(const Tensor<T>& x) const override {
    const auto g = geometry(x);
    AlignedVector<T> col(static_cast<std::size_t>(in_) * k_ * k_ * g.out_h * g.out_w);
    Tensor<T> y(x.n(), out_, g.out_h, g.out_w);
    for (int i = 0; i < x.n(); ++i) apply(x.sample(i), g, col.data(), y.sample(i));
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    const auto g = geometry(x);
    geom_ = g;
    in_shape_ = x.shape();
    const std::size_t per = static_cast<std::size_t>(in_) * k_ * k_ * g.out_h * g.out_w;
    cols_.assign(per * x.n(), T(0));
    Tensor<T> y(x.n(), out_, g.out_h, g.out_w);
    for (int i = 0; i < x.n(); ++i) apply(x.sample(i), g, cols_.data() + per * i, y.sample(i));
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const auto& g = geom_;
    const int n = in_shape_[0];
    const int ckk = in_ * k_ * k_;
    const int hw = g.out_h * g.out_w;
    Tensor<T> dx(n, in_, g.in_h, g.in_w);
    AlignedVector<T> dcol(static_cast<std::size_t>(ckk) * hw);
    MatMap<T> dw(weight_.grad.data(), out_, ckk);
    ConstMatMap<T> w(weight_.value.data(), out_, ckk);
    for (int i = 0; i < n; ++i) {
      ConstMatMap<T> dyi(dy.sample(i), out_, hw);
      ConstMatMap<T> col(cols_.data() + static_cast<std::size_t>(ckk) * hw * i, ckk, hw);
      dw.noalias() += dyi * col.transpose();
      for (int o = 0; o < out_; ++o) bias_.grad[o] += dyi.row(o).sum();
      MatMap<T> dc(dcol.data(), ckk, hw);
      dc.noalias() = w.transpose() * dyi;
      detail::col2im(dcol.data(), g, dx.sample(i));
    }
    return dx;
  }

  void collect(std::vector<Parameter<T>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  void apply(const T* x, const detail::ConvGeometry& g, T* col, T* y) const {
    const int ckk = in_ * k_ * k_;
    const int hw = g.out_h * g.out_w;
    detail::im2col(x, g, col);
    ConstMatMap<T> w(weight_.value.data(), out_, ckk);
    ConstMatMap<T> c(col, ckk, hw);
    MatMap<T> out(y, out_, hw);
    out.noalias() = w * c;
    for (int o = 0; o < out_; ++o) out.row(o).array() += bias_.value[o];
  }

  int in_, out_, k_, s_, p_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  detail::ConvGeometry geom_{};
  std::array<int, 4> in_shape_{};
  AlignedVector<T> cols_;
};

/// Transposed convolution, weight laid out (in, out, k, k).
template <class T>
class ConvTranspose2d final : public Layer<T> {
 public:
  ConvTranspose2d(const std::string& name, int in, int out, int kernel, int stride, int pad, std::mt19937_64& rng,
                  double init_std = 0.02, ParamGroup group = ParamGroup::conv)
      : in_(in), out_(out), k_(kernel), s_(stride), p_(pad),
        weight_(name + ".weight", Tensor<T>(in, out, kernel, kernel), group),
        bias_(name + ".bias", Tensor<T>(1, out, 1, 1), group) {
    init_normal(weight_.value, rng, init_std, in * kernel * kernel);
  }

  // Geometry of the equivalent forward convolution from the output grid.
  detail::ConvGeometry geometry(const Tensor<T>& x) const {
    if (x.c() != in_) fail(ErrorKind::ShapeError, weight_.name + ": expected " + std::to_string(in_) + " channels, got " + std::to_string(x.c()));
    const int oh = (x.h() - 1) * s_ - 2 * p_ + k_;
    const int ow = (x.w() - 1) * s_ - 2 * p_ + k_;
    return {out_, oh, ow, k_, s_, p_, x.h(), x.w()};
  }

  Tensor<T> infer(const Tensor<T>& x) const override {
    const auto g = geometry(x);
    Tensor<T> y(x.n(), out_, g.in_h, g.in_w);
    AlignedVector<T> col(static_cast<std::size_t>(out_) * k_ * k_ * x.plane());
    for (int i = 0; i < x.n(); ++i) apply(x.sample(i), g, col.data(), y.sample(i));
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    geom_ = geometry(x);
    input_ = x;
    return infer(x);
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    const auto& g = geom_;
    const int n = input_.n();
    const int okk = out_ * k_ * k_;
    const int hw = static_cast<int>(input_.plane());
    Tensor<T> dx = Tensor<T>::like(input_);
    AlignedVector<T> dcol(static_cast<std::size_t>(okk) * hw);
    ConstMatMap<T> w(weight_.value.data(), in_, okk);
    MatMap<T> dw(weight_.grad.data(), in_, okk);
    for (int i = 0; i < n; ++i) {
      detail::im2col(dy.sample(i), g, dcol.data());
      ConstMatMap<T> dc(dcol.data(), okk, hw);
      ConstMatMap<T> xi(input_.sample(i), in_, hw);
      MatMap<T> dxi(dx.sample(i), in_, hw);
      dxi.noalias() = w * dc;
      dw.noalias() += xi * dc.transpose();
      const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;
      for (int o = 0; o < out_; ++o) {
        const T* d = dy.sample(i) + o * plane;
        T acc = 0;
        for (std::size_t j = 0; j < plane; ++j) acc += d[j];
        bias_.grad[o] += acc;
      }
    }
    return dx;
  }

  void collect(std::vector<Parameter<T>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  void apply(const T* x, const detail::ConvGeometry& g, T* col, T* y) const {
    const int okk = out_ * k_ * k_;
    const int hw = g.out_h * g.out_w;
    ConstMatMap<T> w(weight_.value.data(), in_, okk);
    ConstMatMap<T> xi(x, in_, hw);
    MatMap<T> c(col, okk, hw);
    c.noalias() = w.transpose() * xi;
    const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;
    for (int o = 0; o < out_; ++o) std::fill_n(y + o * plane, plane, bias_.value[o]);
    detail::col2im(col, g, y);
  }

  int in_, out_, k_, s_, p_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  detail::ConvGeometry geom_{};
  Tensor<T> input_;
};

/// Normalizes each (sample, channel) plane; identical in training and
/// inference.
template <class T>
class InstanceNorm2d final : public Layer<T> {
 public:
  InstanceNorm2d(const std::string& name, int channels, double eps = 1e-5)
      : eps_(eps), gamma_(name + ".gamma", Tensor<T>(1, channels, 1, 1, T(1)), ParamGroup::norm),
        beta_(name + ".beta", Tensor<T>(1, channels, 1, 1), ParamGroup::norm) {}

  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> xhat;
    std::vector<T> inv;
    return normalize(x, xhat, inv);
  }

  Tensor<T> forward(const Tensor<T>& x) override { return normalize(x, xhat_, inv_std_); }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx = Tensor<T>::like(dy);
    const std::size_t plane = dy.plane();
    for (int i = 0; i < dy.n(); ++i) {
      for (int c = 0; c < dy.c(); ++c) {
        const std::size_t off = (static_cast<std::size_t>(i) * dy.c() + c) * plane;
        const T g = gamma_.value[c];
        T sum_dy = 0, sum_dy_xhat = 0;
        for (std::size_t j = 0; j < plane; ++j) {
          sum_dy += dy[off + j];
          sum_dy_xhat += dy[off + j] * xhat_[off + j];
        }
        gamma_.grad[c] += sum_dy_xhat;
        beta_.grad[c] += sum_dy;
        const T m = static_cast<T>(plane);
        const T inv = inv_std_[static_cast<std::size_t>(i) * dy.c() + c];
        for (std::size_t j = 0; j < plane; ++j) {
          dx[off + j] = g * inv * (dy[off + j] - sum_dy / m - xhat_[off + j] * sum_dy_xhat / m);
        }
      }
    }
    return dx;
  }

  void collect(std::vector<Parameter<T>*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

 private:
  Tensor<T> normalize(const Tensor<T>& x, Tensor<T>& xhat, std::vector<T>& inv_std) const {
    xhat = Tensor<T>::like(x);
    inv_std.assign(static_cast<std::size_t>(x.n()) * x.c(), T(0));
    Tensor<T> y = Tensor<T>::like(x);
    const std::size_t plane = x.plane();
    for (int i = 0; i < x.n(); ++i) {
      for (int c = 0; c < x.c(); ++c) {
        const std::size_t off = (static_cast<std::size_t>(i) * x.c() + c) * plane;
        T mean = 0;
        for (std::size_t j = 0; j < plane; ++j) mean += x[off + j];
        mean /= static_cast<T>(plane);
        T var = 0;
        for (std::size_t j = 0; j < plane; ++j) var += (x[off + j] - mean) * (x[off + j] - mean);
        var /= static_cast<T>(plane);
        const T inv = T(1) / std::sqrt(var + static_cast<T>(eps_));
        inv_std[static_cast<std::size_t>(i) * x.c() + c] = inv;
        for (std::size_t j = 0; j < plane; ++j) {
          xhat[off + j] = (x[off + j] - mean) * inv;
          y[off + j] = gamma_.value[c] * xhat[off + j] + beta_.value[c];
        }
      }
    }
    return y;
  }

  double eps_;
  Parameter<T> gamma_;
  Parameter<T> beta_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

/// Batch statistics during `forward`, running statistics during `infer`.
template <class T>
class BatchNorm2d final : public Layer<T> {
 public:
  BatchNorm2d(const std::string& name, int channels, double momentum = 0.1, double eps = 1e-5)
      : name_(name), momentum_(momentum), eps_(eps),
        gamma_(name + ".gamma", Tensor<T>(1, channels, 1, 1, T(1)), ParamGroup::norm),
        beta_(name + ".beta", Tensor<T>(1, channels, 1, 1), ParamGroup::norm),
        running_mean_(1, channels, 1, 1), running_var_(1, channels, 1, 1, T(1)) {}

  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> y = Tensor<T>::like(x);
    const std::size_t plane = x.plane();
    for (int i = 0; i < x.n(); ++i) {
      for (int c = 0; c < x.c(); ++c) {
        const std::size_t off = (static_cast<std::size_t>(i) * x.c() + c) * plane;
        const T inv = T(1) / std::sqrt(running_var_[c] + static_cast<T>(eps_));
        for (std::size_t j = 0; j < plane; ++j) {
          y[off + j] = gamma_.value[c] * (x[off + j] - running_mean_[c]) * inv + beta_.value[c];
        }
      }
    }
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    xhat_ = Tensor<T>::like(x);
    inv_std_.assign(x.c(), T(0));
    Tensor<T> y = Tensor<T>::like(x);
    const std::size_t plane = x.plane();
    const double m = static_cast<double>(plane) * x.n();
    for (int c = 0; c < x.c(); ++c) {
      T mean = 0;
      for (int i = 0; i < x.n(); ++i) {
        const std::size_t off = (static_cast<std::size_t>(i) * x.c() + c) * plane;
        for (std::size_t j = 0; j < plane; ++j) mean += x[off + j];
      }
      mean /= static_cast<T>(m);
      T var = 0;
      for (int i = 0; i < x.n(); ++i) {
        const std::size_t off = (static_cast<std::size_t>(i) * x.c() + c) * plane;
        for (std::size_t j = 0; j < plane; ++j) var += (x[off + j] - mean) * (x[off + j] - mean);
      }
      var /= static_cast<T>(m);
      const T inv = T(1) / std::sqrt(var + static_cast<T>(eps_));
      inv_std_[c] = inv;
      for (int i = 0; i < x.n(); ++i) {
        const std::size_t off = (static_cast<std::size_t>(i) * x.c() + c) * plane;
        for (std::size_t j = 0; j < plane; ++j) {
          xhat_[off + j] = (x[off + j] - mean) * inv;
          y[off + j] = gamma_.value[c] * xhat_[off + j] + beta_.value[c];
        }
      }
      const T unbiased = m > 1 ? var * static_cast<T>(m / (m - 1)) : var;
      running_mean_[c] = static_cast<T>((1 - momentum_) * running_mean_[c] + momentum_ * mean);
      running_var_[c] = static_cast<T>((1 - momentum_) * running_var_[c] + momentum_ * unbiased);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx = Tensor<T>::like(dy);
    const std::size_t plane = dy.plane();
    const T m = static_cast<T>(plane * dy.n());
    for (int c = 0; c < dy.c(); ++c) {
      T sum_dy = 0, sum_dy_xhat = 0;
      for (int i = 0; i < dy.n(); ++i) {
        const std::size_t off = (static_cast<std::size_t>(i) * dy.c() + c) * plane;
        for (std::size_t j = 0; j < plane; ++j) {
          sum_dy += dy[off + j];
          sum_dy_xhat += dy[off + j] * xhat_[off + j];
        }
      }
      gamma_.grad[c] += sum_dy_xhat;
      beta_.grad[c] += sum_dy;
      const T scale = gamma_.value[c] * inv_std_[c];
      for (int i = 0; i < dy.n(); ++i) {
        const std::size_t off = (static_cast<std::size_t>(i) * dy.c() + c) * plane;
        for (std::size_t j = 0; j < plane; ++j) {
          dx[off + j] = scale * (dy[off + j] - sum_dy / m - xhat_[off + j] * sum_dy_xhat / m);
        }
      }
    }
    return dx;
  }

  void collect(std::vector<Parameter<T>*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

  void collect_buffers(std::vector<Buffer<T>>& out) override {
    out.push_back({name_ + ".running_mean", &running_mean_});
    out.push_back({name_ + ".running_var", &running_var_});
  }

 private:
  std::string name_;
  double momentum_;
  double eps_;
  Parameter<T> gamma_;
  Parameter<T> beta_;
  Tensor<T> running_mean_;
  Tensor<T> running_var_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

template <class T>
class LeakyReLU final : public Layer<T> {
 public:
  explicit LeakyReLU(double slope = 0.2) : slope_(static_cast<T>(slope)) {}

  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> y = x;
    for (auto& v : y.values()) v = v > 0 ? v : slope_ * v;
    return y;
  }
  Tensor<T> forward(const Tensor<T>& x) override {
    input_ = x;
    return infer(x);
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (!(input_[i] > 0)) dx[i] *= slope_;
    }
    return dx;
  }

 private:
  T slope_;
  Tensor<T> input_;
};

template <class T>
class ReLU final : public Layer<T> {
 public:
  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> y = x;
    for (auto& v : y.values()) v = v > 0 ? v : T(0);
    return y;
  }
  Tensor<T> forward(const Tensor<T>& x) override {
    input_ = x;
    return infer(x);
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (!(input_[i] > 0)) dx[i] = 0;
    }
    return dx;
  }

 private:
  Tensor<T> input_;
};

template <class T>
class Tanh final : public Layer<T> {
 public:
  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> y = x;
    for (auto& v : y.values()) v = std::tanh(v);
    return y;
  }
  Tensor<T> forward(const Tensor<T>& x) override {
    output_ = infer(x);
    return output_;
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= T(1) - output_[i] * output_[i];
    return dx;
  }

 private:
  Tensor<T> output_;
};

template <class T>
class GlobalAvgPool final : public Layer<T> {
 public:
  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> y(x.n(), x.c(), 1, 1);
    const std::size_t plane = x.plane();
    for (int i = 0; i < x.n(); ++i) {
      for (int c = 0; c < x.c(); ++c) {
        const T* p = x.sample(i) + c * plane;
        T s = 0;
        for (std::size_t j = 0; j < plane; ++j) s += p[j];
        y.at(i, c, 0, 0) = s / static_cast<T>(plane);
      }
    }
    return y;
  }
  Tensor<T> forward(const Tensor<T>& x) override {
    in_shape_ = x.shape();
    return infer(x);
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    const std::size_t plane = dx.plane();
    for (int i = 0; i < dx.n(); ++i) {
      for (int c = 0; c < dx.c(); ++c) {
        const T g = dy.at(i, c, 0, 0) / static_cast<T>(plane);
        std::fill_n(dx.sample(i) + c * plane, plane, g);
      }
    }
    return dx;
  }

 private:
  std::array<int, 4> in_shape_{};
};

/// Fully connected over the flattened C*H*W input; output (N, out, 1, 1).
template <class T>
class Linear final : public Layer<T> {
 public:
  Linear(const std::string& name, int in, int out, std::mt19937_64& rng, double init_std = 0.0,
         ParamGroup group = ParamGroup::head)
      : in_(in), out_(out), weight_(name + ".weight", Tensor<T>(1, 1, out, in), group),
        bias_(name + ".bias", Tensor<T>(1, out, 1, 1), group) {
    init_normal(weight_.value, rng, init_std > 0.0 ? init_std : std::sqrt(1.0 / in), in);
  }

  Tensor<T> infer(const Tensor<T>& x) const override {
    if (static_cast<int>(x.sample_size()) != in_) fail(ErrorKind::ShapeError, weight_.name + ": input size mismatch");
    Tensor<T> y(x.n(), out_, 1, 1);
    ConstMatMap<T> w(weight_.value.data(), out_, in_);
    ConstMatMap<T> xm(x.data(), x.n(), in_);
    MatMap<T> ym(y.data(), x.n(), out_);
    ym.noalias() = xm * w.transpose();
    for (int i = 0; i < x.n(); ++i) {
      for (int o = 0; o < out_; ++o) ym(i, o) += bias_.value[o];
    }
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    input_ = x;
    return infer(x);
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    ConstMatMap<T> w(weight_.value.data(), out_, in_);
    ConstMatMap<T> xm(input_.data(), input_.n(), in_);
    ConstMatMap<T> dym(dy.data(), dy.n(), out_);
    MatMap<T> dw(weight_.grad.data(), out_, in_);
    dw.noalias() += dym.transpose() * xm;
    for (int i = 0; i < dy.n(); ++i) {
      for (int o = 0; o < out_; ++o) bias_.grad[o] += dym(i, o);
    }
    Tensor<T> dx = Tensor<T>::like(input_);
    MatMap<T> dxm(dx.data(), dx.n(), in_);
    dxm.noalias() = dym * w;
    return dx;
  }

  void collect(std::vector<Parameter<T>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  int in_, out_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Tensor<T> input_;
};

template <class T>
class Sequential final : public Layer<T> {
 public:
  template <class L, class... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<T> infer(const Tensor<T>& x) const override {
    Tensor<T> y = x;
    for (const auto& l : layers_) y = l->infer(y);
    return y;
  }
  Tensor<T> forward(const Tensor<T>& x) override {
    Tensor<T> y = x;
    for (auto& l : layers_) y = l->forward(y);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) override {
    Tensor<T> g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }
  void collect(std::vector<Parameter<T>*>& out) override {
    for (auto& l : layers_) l->collect(out);
  }
  void collect_buffers(std::vector<Buffer<T>>& out) override {
    for (auto& l : layers_) l->collect_buffers(out);
  }

  std::size_t size() const noexcept { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

template <class T>
void zero_grad(const std::vector<Parameter<T>*>& params) {
  for (auto* p : params) p->grad.fill(T(0));
}

}  // namespace egoexo::nn
