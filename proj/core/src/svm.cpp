#include "egoexo/svm.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "egoexo/error.hpp"

namespace egoexo::svm {

double BinarySvm::decision(std::span<const float> x) const {
  double s = w.back();
  for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
  return s;
}

BinarySvm fit_binary(std::span<const std::vector<float>> x, std::span<const int> y, const SvmOptions& opts) {
  if (x.empty() || x.size() != y.size()) fail(ErrorKind::InvalidArgument, "svm needs matching nonempty x and y");
  const std::size_t n = x.size();
  const std::size_t d = x.front().size();
  BinarySvm m;
  m.w.assign(d + 1, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> qii(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != d) fail(ErrorKind::DimensionMismatch, "svm features differ in dimension");
    double s = 1.0;  // bias feature
    for (float v : x[i]) s += static_cast<double>(v) * v;
    qii[i] = s;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opts.seed);
  for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
      const double yi = y[i];
      const double g = yi * m.decision(x[i]) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] >= opts.c) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, opts.c);
      const double delta = (alpha[i] - old) * yi;
      for (std::size_t j = 0; j < d; ++j) m.w[j] += delta * x[i][j];
      m.w[d] += delta;
    }
    if (pg_max - pg_min < opts.tolerance) break;
  }
  return m;
}

void LinearSvm::fit(std::span<const std::vector<float>> x, std::span<const int> labels, const SvmOptions& opts) {
  if (x.empty() || x.size() != labels.size()) fail(ErrorKind::MissingLabels, "svm needs one label per sample");
  classes_.assign(labels.begin(), labels.end());
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
  models_.clear();
  if (classes_.size() == 1) return;
  std::vector<int> y(labels.size());
  for (int c : classes_) {
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == c ? 1 : -1;
    auto o = opts;
    o.seed = opts.seed + static_cast<std::uint64_t>(c);
    models_.push_back(fit_binary(x, y, o));
  }
}

int LinearSvm::predict(std::span<const float> x) const {
  if (classes_.empty()) fail(ErrorKind::UntrainedModel, "svm not fitted");
  if (classes_.size() == 1) return classes_.front();
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < models_.size(); ++k) {
    const double s = models_[k].decision(x);
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(k);
    }
  }
  return classes_[best];
}

double LinearSvm::accuracy(std::span<const std::vector<float>> x, std::span<const int> labels) const {
  if (x.empty() || x.size() != labels.size()) fail(ErrorKind::MissingLabels, "accuracy needs one label per sample");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < x.size(); ++i) hits += predict(x[i]) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(x.size());
}

}  // namespace egoexo::svm
