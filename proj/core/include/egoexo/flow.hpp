#pragma once

#include <filesystem>
#include <memory>
#include <string_view>
#include <span>
#include <vector>

#include "egoexo/dataset.hpp"
#include "egoexo/image.hpp"

namespace egoexo {

/// Dense optical flow between consecutive frames.
class FlowEstimator {
 public:
  virtual ~FlowEstimator() = default;
  /// Displacement that carries `prev` onto `next`: next(p + flow(p)) ~ prev(p).
  virtual FlowField estimate(const Frame& prev, const Frame& next) const = 0;
};

struct GradientFlowOptions {
  int levels = 3;
  int iterations = 10;
  /// Gaussian width of the structure-tensor integration window (pixels).
  double window_sigma = 2.0;
  /// Weight pulling each vector toward its neighborhood mean; fills in
  /// textureless regions.
  double smoothness = 30.0;
};

/// Coarse-to-fine, warping, gradient-based estimator: each iteration solves a
/// regularized local least-squares system on the linearized brightness
/// constancy residual.
class GradientFlowEstimator final : public FlowEstimator {
 public:
  explicit GradientFlowEstimator(GradientFlowOptions opts = {}) : opts_(opts) {}
  FlowField estimate(const Frame& prev, const Frame& next) const override;

  const GradientFlowOptions& options() const noexcept { return opts_; }

 private:
  GradientFlowOptions opts_;
};

/// Flow from `prev` to `next` with the reference estimator. The result carries
/// source_time 0; callers stamp the time index.
FlowField compute_flow(const Frame& prev, const Frame& next);

inline constexpr double kDefaultFlowSigma = 1.5;

struct FlowSequence {
  std::vector<FlowField> flows;
  double smoothing_sigma = 0.0;
};

/// Normalized Gaussian truncated at +/- ceil(3 sigma); {1} for sigma 0.
std::vector<double> gaussian_kernel(double sigma);

/// Per-pixel, per-channel Gaussian smoothing along time. Near the ends the
/// kernel is renormalized over the frames that exist.
FlowSequence smooth_temporal(const FlowSequence& fs, double sigma);

/// Flows for t = 1..n-1 (field t maps frame t-1 onto frame t).
FlowSequence compute_flow_sequence(std::span<const Frame> frames, const FlowEstimator& estimator);

/// `dir/<sequence>/<view>/%06d.flo`; index t holds the flow from t-1 to t.
std::filesystem::path flow_file(const std::filesystem::path& dir, std::string_view sequence, std::string_view view,
                                int t);

/// Computes smoothed flow for the ego and exo views of every sequence in
/// `split` and writes them under `out_dir` in the flow_file layout. Returns the
/// number of fields written.
int write_flow_split(const Manifest& m, Split split, const FlowEstimator& estimator, double sigma,
                     const std::filesystem::path& out_dir);

}  // namespace egoexo
