#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace egoexo::svm {

struct SvmOptions {
  double c = 1.0;
  int max_epochs = 200;
  /// Stop when the projected-gradient spread falls below this.
  double tolerance = 1e-3;
  std::uint64_t seed = 0;
};

/// Binary linear SVM (hinge loss, L2 regularization) with an appended bias
/// feature, fit by dual coordinate descent. Labels are +1 / -1.
struct BinarySvm {
  std::vector<double> w;  // last entry is the bias
  double decision(std::span<const float> x) const;
};

BinarySvm fit_binary(std::span<const std::vector<float>> x, std::span<const int> y, const SvmOptions& opts = {});

/// One-vs-rest over the classes present in the training labels.
class LinearSvm {
 public:
  void fit(std::span<const std::vector<float>> x, std::span<const int> labels, const SvmOptions& opts = {});
  int predict(std::span<const float> x) const;
  double accuracy(std::span<const std::vector<float>> x, std::span<const int> labels) const;
  const std::vector<int>& classes() const noexcept { return classes_; }
  bool fitted() const noexcept { return !classes_.empty(); }

 private:
  std::vector<int> classes_;
  std::vector<BinarySvm> models_;
};

}  // namespace egoexo::svm
