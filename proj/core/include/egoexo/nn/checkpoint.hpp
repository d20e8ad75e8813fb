#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "egoexo/nn/adam.hpp"
#include "egoexo/nn/layers.hpp"

namespace egoexo::nn {

struct NamedArray {
  std::string name;
  std::array<int, 4> shape{};
  std::vector<float> data;
};

/// Single-file training archive: version tag, model kind, JSON config echo,
/// float32 parameter arrays, buffers and optimizer state.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string kind;
  std::string config_json = "{}";
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  std::vector<NamedArray> params;
  std::vector<NamedArray> buffers;
  std::vector<NamedArray> optimizer;

  const NamedArray* find_param(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

template <class T>
NamedArray to_named(const std::string& name, const Tensor<T>& t) {
  NamedArray a{name, t.shape(), std::vector<float>(t.size())};
  for (std::size_t i = 0; i < t.size(); ++i) a.data[i] = static_cast<float>(t[i]);
  return a;
}

template <class T>
void assign_named(const NamedArray& a, Tensor<T>& t) {
  if (a.shape != t.shape()) {
    fail(ErrorKind::CheckpointIncompatible, "array " + a.name + " has shape mismatch against " + t.shape_string());
  }
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(a.data[i]);
}

template <class T>
std::vector<NamedArray> export_params(const std::vector<Parameter<T>*>& params) {
  std::vector<NamedArray> out;
  for (auto* p : params) out.push_back(to_named(p->name, p->value));
  return out;
}

template <class T>
std::vector<NamedArray> export_buffers(const std::vector<Buffer<T>>& buffers) {
  std::vector<NamedArray> out;
  for (const auto& b : buffers) out.push_back(to_named(b.name, *b.value));
  return out;
}

/// Loads arrays by name; every model parameter must be present with the same
/// shape, otherwise CheckpointIncompatible.
template <class T>
void import_params(const std::vector<NamedArray>& arrays, const std::vector<Parameter<T>*>& params) {
  for (auto* p : params) {
    const auto it = std::find_if(arrays.begin(), arrays.end(), [&](const NamedArray& a) { return a.name == p->name; });
    if (it == arrays.end()) fail(ErrorKind::CheckpointIncompatible, "missing parameter " + p->name);
    assign_named(*it, p->value);
  }
}

template <class T>
void import_buffers(const std::vector<NamedArray>& arrays, const std::vector<Buffer<T>>& buffers) {
  for (const auto& b : buffers) {
    const auto it = std::find_if(arrays.begin(), arrays.end(), [&](const NamedArray& a) { return a.name == b.name; });
    if (it == arrays.end()) fail(ErrorKind::CheckpointIncompatible, "missing buffer " + b.name);
    assign_named(*it, *b.value);
  }
}

template <class T>
void export_adam(Adam<T>& opt, const std::string& prefix, std::vector<NamedArray>& out) {
  const auto& ps = opt.params();
  for (std::size_t k = 0; k < ps.size(); ++k) {
    out.push_back(to_named(prefix + ".m." + ps[k]->name, opt.first_moments()[k]));
    out.push_back(to_named(prefix + ".v." + ps[k]->name, opt.second_moments()[k]));
  }
  Tensor<T> t(1, 1, 1, 1, static_cast<T>(opt.steps()));
  out.push_back(to_named(prefix + ".t", t));
}

/// Restores optimizer state when present; silently keeps fresh state for a
/// checkpoint without it (e.g. a pretrained-weights-only file).
template <class T>
void import_adam(const std::vector<NamedArray>& arrays, const std::string& prefix, Adam<T>& opt) {
  auto find = [&](const std::string& name) -> const NamedArray* {
    for (const auto& a : arrays) {
      if (a.name == name) return &a;
    }
    return nullptr;
  };
  const auto* t = find(prefix + ".t");
  if (!t) return;
  const auto& ps = opt.params();
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const auto* m = find(prefix + ".m." + ps[k]->name);
    const auto* v = find(prefix + ".v." + ps[k]->name);
    if (!m || !v) fail(ErrorKind::CheckpointIncompatible, "optimizer state missing for " + ps[k]->name);
    assign_named(*m, opt.first_moments()[k]);
    assign_named(*v, opt.second_moments()[k]);
  }
  opt.set_steps(static_cast<long long>(t->data.at(0)));
}

}  // namespace egoexo::nn
