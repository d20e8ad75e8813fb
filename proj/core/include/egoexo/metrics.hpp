#pragma once

#include <memory>
#include <string>
#include <optional>
#include <span>
#include <vector>

#include "egoexo/image.hpp"
#include "egoexo/ranking.hpp"

namespace egoexo::metrics {

/// Maps a frame to a probability distribution over `classes()` categories.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual int classes() const = 0;
  virtual std::vector<double> predict(const Frame& f) const = 0;
};

/// Eight bins by the high bit of each RGB channel, with add-one smoothing.
class ColorHistogramClassifier final : public Classifier {
 public:
  int classes() const override { return 8; }
  std::vector<double> predict(const Frame& f) const override;
};

struct MetricConfig {
  double dynamic_range = 255.0;
  double k1 = 0.01;
  double k2 = 0.03;
  int window = 11;
  double window_sigma = 1.5;
  /// Returned by PSNR and Sharpness Difference when the error is zero.
  double cap_db = 100.0;

  double c1() const noexcept { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const noexcept { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

/// Keeps the k largest entries and spreads the remaining mass evenly over the
/// other n - k entries.
std::vector<double> topk_smooth(std::span<const double> p, int k);

/// exp(mean KL(p(y|x) || p(y))). DegenerateClassifier when a row is not a
/// distribution.
double inception_score(std::span<const std::vector<double>> probs, std::optional<int> topk = std::nullopt);
double inception_score(std::span<const Frame> frames, const Classifier& clf, std::optional<int> topk = std::nullopt);

/// Mean windowed SSIM on luma over valid window positions.
double ssim(const Frame& a, const Frame& b, const MetricConfig& cfg = {});
/// Same, over precomputed luma planes of size h x w.
double ssim_luma(std::span<const double> a, std::span<const double> b, int h, int w, const MetricConfig& cfg = {});

double psnr(const Frame& truth, const Frame& test, const MetricConfig& cfg = {});
double sharpness_difference(const Frame& truth, const Frame& test, const MetricConfig& cfg = {});

/// Normalized 1-D Gaussian of `size` taps.
std::vector<double> gaussian_window(int size, double sigma);

struct CMCCurve {
  std::vector<double> values;  // CMC(k) for k = 1..N
  int gallery_size = 0;
  double auc = 0.0;
};

CMCCurve cmc(std::span<const RankingResult> results);
/// From raw 1-based ranks against a gallery of size n.
CMCCurve cmc_from_ranks(std::span<const int> ranks, int n);

/// Synthesis report: Inception Score over generated frames plus
/// mean full-reference scores against the ground truth.
struct SynthesisScores {
  double is_all = 0.0;
  double is_top1 = 0.0;
  double is_top5 = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
  double sharp_diff = 0.0;
  int frames = 0;
};

/// Throws EmptyInput when there are no frames and SizeMismatch when the two
/// lists differ in length.
SynthesisScores score_synthesis(std::span<const Frame> truth, std::span<const Frame> generated,
                                const Classifier& clf, const MetricConfig& cfg = {});

std::string to_json(const SynthesisScores& s);
std::string to_csv(const SynthesisScores& s);

}  // namespace egoexo::metrics
