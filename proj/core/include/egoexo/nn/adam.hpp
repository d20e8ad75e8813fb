#pragma once

#include <cmath>
#include <set>
#include <vector>

#include "egoexo/nn/layers.hpp"

namespace egoexo::nn {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive moment estimation over a fixed parameter list. Parameters in a
/// frozen group are never touched.
template <class T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
    for (auto* p : params_) {
      m_.push_back(Tensor<T>::like(p->value));
      v_.push_back(Tensor<T>::like(p->value));
    }
  }

  void freeze(ParamGroup g) { frozen_.insert(g); }
  void unfreeze(ParamGroup g) { frozen_.erase(g); }
  bool is_frozen(ParamGroup g) const { return frozen_.contains(g); }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto* p = params_[k];
      if (frozen_.contains(p->group)) continue;
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double g = p->grad[i];
        m[i] = static_cast<T>(opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g);
        v[i] = static_cast<T>(opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p->value[i] = static_cast<T>(p->value[i] - opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps));
      }
    }
  }

  void zero_grad() { nn::zero_grad(params_); }

  long long steps() const noexcept { return t_; }
  void set_steps(long long t) noexcept { t_ = t; }
  const std::vector<Parameter<T>*>& params() const noexcept { return params_; }
  std::vector<Tensor<T>>& first_moments() noexcept { return m_; }
  std::vector<Tensor<T>>& second_moments() noexcept { return v_; }
  AdamOptions& options() noexcept { return opts_; }

 private:
  std::vector<Parameter<T>*> params_;
  AdamOptions opts_;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
  std::set<ParamGroup> frozen_;
  long long t_ = 0;
};

}  // namespace egoexo::nn
