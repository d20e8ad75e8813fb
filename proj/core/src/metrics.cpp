#include "egoexo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "egoexo/error.hpp"
#include "json.hpp"

namespace egoexo::metrics {

std::vector<double> ColorHistogramClassifier::predict(const Frame& f) const {
  std::vector<double> counts(8, 1.0);
  const auto px = f.pixels();
  for (std::size_t i = 0; i + 2 < px.size(); i += 3) {
    const int bin = (px[i] >> 7) | ((px[i + 1] >> 7) << 1) | ((px[i + 2] >> 7) << 2);
    counts[bin] += 1.0;
  }
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  for (auto& c : counts) c /= total;
  return counts;
}

namespace {

void check_distribution(std::span<const double> p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::DegenerateClassifier, "negative or non-finite probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) fail(ErrorKind::DegenerateClassifier, "probabilities sum to " + std::to_string(sum));
}

void require_same(const Frame& a, const Frame& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    fail(ErrorKind::ShapeError, "frames differ in size: " + std::to_string(a.height()) + "x" +
                                    std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                                    std::to_string(b.width()));
  }
}

double to_db(double max_value, double err, double cap) {
  if (err <= 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(max_value * max_value / err));
}

}  // namespace

std::vector<double> topk_smooth(std::span<const double> p, int k) {
  const int n = static_cast<int>(p.size());
  if (k < 1 || k >= n) fail(ErrorKind::InvalidArgument, "top-k requires 1 <= k < n");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return p[a] > p[b]; });
  double kept = 0.0;
  for (int i = 0; i < k; ++i) kept += p[idx[i]];
  const double rest = std::max(0.0, 1.0 - kept) / (n - k);
  std::vector<double> out(n, rest);
  for (int i = 0; i < k; ++i) out[idx[i]] = p[idx[i]];
  return out;
}

double inception_score(std::span<const std::vector<double>> probs, std::optional<int> topk) {
  if (probs.empty()) fail(ErrorKind::EmptyInput, "inception score of no samples");
  const std::size_t n = probs.front().size();
  std::vector<std::vector<double>> rows;
  rows.reserve(probs.size());
  for (const auto& p : probs) {
    if (p.size() != n) fail(ErrorKind::DegenerateClassifier, "class count varies across samples");
    check_distribution(p);
    rows.push_back(topk ? topk_smooth(p, *topk) : p);
  }
  std::vector<double> marginal(n, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < n; ++j) marginal[j] += r[j];
  }
  for (auto& v : marginal) v /= static_cast<double>(rows.size());
  double kl_sum = 0.0;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < n; ++j) {
      if (r[j] > 0.0) kl_sum += r[j] * std::log(r[j] / marginal[j]);
    }
  }
  return std::exp(kl_sum / static_cast<double>(rows.size()));
}

double inception_score(std::span<const Frame> frames, const Classifier& clf, std::optional<int> topk) {
  std::vector<std::vector<double>> probs;
  probs.reserve(frames.size());
  for (const auto& f : frames) probs.push_back(clf.predict(f));
  return inception_score(probs, topk);
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    w[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

double ssim_luma(std::span<const double> a, std::span<const double> b, int h, int w, const MetricConfig& cfg) {
  const int k = cfg.window;
  if (h < k || w < k) fail(ErrorKind::ShapeError, "image smaller than the SSIM window");
  const auto g = gaussian_window(k, cfg.window_sigma);
  const double c1 = cfg.c1();
  const double c2 = cfg.c2();

  // Separable filtering: horizontal pass over all rows, then vertical.
  const int ow = w - k + 1;
  const int oh = h - k + 1;
  auto hpass = [&](auto value) {
    std::vector<double> out(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += g[i] * value(static_cast<std::size_t>(y) * w + x + i);
        out[static_cast<std::size_t>(y) * ow + x] = s;
      }
    }
    return out;
  };
  auto vpass = [&](const std::vector<double>& in) {
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += g[i] * in[static_cast<std::size_t>(y + i) * ow + x];
        out[static_cast<std::size_t>(y) * ow + x] = s;
      }
    }
    return out;
  };
  const auto mu_a = vpass(hpass([&](std::size_t i) { return a[i]; }));
  const auto mu_b = vpass(hpass([&](std::size_t i) { return b[i]; }));
  const auto e_aa = vpass(hpass([&](std::size_t i) { return a[i] * a[i]; }));
  const auto e_bb = vpass(hpass([&](std::size_t i) { return b[i] * b[i]; }));
  const auto e_ab = vpass(hpass([&](std::size_t i) { return a[i] * b[i]; }));

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double ssim(const Frame& a, const Frame& b, const MetricConfig& cfg) {
  require_same(a, b);
  return ssim_luma(to_luma(a), to_luma(b), a.height(), a.width(), cfg);
}

double psnr(const Frame& truth, const Frame& test, const MetricConfig& cfg) {
  require_same(truth, test);
  const auto pa = truth.pixels();
  const auto pb = test.pixels();
  double sse = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    sse += d * d;
  }
  return to_db(cfg.dynamic_range, sse / static_cast<double>(pa.size()), cfg.cap_db);
}

double sharpness_difference(const Frame& truth, const Frame& test, const MetricConfig& cfg) {
  require_same(truth, test);
  const int h = truth.height();
  const int w = truth.width();
  const auto ya = to_luma(truth);
  const auto yb = to_luma(test);
  // Forward differences; the last row and column have zero gradient.
  auto grad_sum = [&](const std::vector<double>& y, int r, int c) {
    const std::size_t i = static_cast<std::size_t>(r) * w + c;
    const double gi = r + 1 < h ? y[i + w] - y[i] : 0.0;
    const double gj = c + 1 < w ? y[i + 1] - y[i] : 0.0;
    return gi + gj;
  };
  double s = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) s += std::abs(grad_sum(ya, r, c) - grad_sum(yb, r, c));
  }
  return to_db(cfg.dynamic_range, s / (static_cast<double>(h) * w), cfg.cap_db);
}

CMCCurve cmc_from_ranks(std::span<const int> ranks, int n) {
  if (ranks.empty()) fail(ErrorKind::EmptyInput, "cmc of no queries");
  if (n < 1) fail(ErrorKind::InvalidArgument, "gallery size must be >= 1");
  std::vector<double> hist(n + 1, 0.0);
  for (int r : ranks) {
    if (r < 1 || r > n) fail(ErrorKind::InvalidArgument, "rank " + std::to_string(r) + " outside [1, " + std::to_string(n) + "]");
    hist[r] += 1.0;
  }
  CMCCurve c;
  c.gallery_size = n;
  c.values.resize(n);
  double cum = 0.0;
  double area = 0.0;
  const double q = static_cast<double>(ranks.size());
  for (int k = 1; k <= n; ++k) {
    cum += hist[k];
    c.values[k - 1] = cum / q;
    area += c.values[k - 1];
  }
  c.auc = area / n;
  return c;
}

CMCCurve cmc(std::span<const RankingResult> results) {
  if (results.empty()) fail(ErrorKind::EmptyInput, "cmc of no queries");
  const int n = results.front().gallery_size();
  std::vector<int> ranks;
  ranks.reserve(results.size());
  for (const auto& r : results) {
    if (r.gallery_size() != n) fail(ErrorKind::MixedGallerySizes, "results ranked against different gallery sizes");
    ranks.push_back(r.rank_of_truth);
  }
  return cmc_from_ranks(ranks, n);
}

SynthesisScores score_synthesis(std::span<const Frame> truth, std::span<const Frame> generated,
                                const Classifier& clf, const MetricConfig& cfg) {
  if (generated.empty()) fail(ErrorKind::EmptyInput, "no generated frames");
  if (truth.size() != generated.size()) fail(ErrorKind::SizeMismatch, "truth and generated lists differ in length");
  SynthesisScores s;
  s.frames = static_cast<int>(generated.size());
  s.is_all = inception_score(generated, clf);
  s.is_top1 = inception_score(generated, clf, 1);
  s.is_top5 = inception_score(generated, clf, 5);
  for (std::size_t i = 0; i < generated.size(); ++i) {
    s.ssim += ssim(truth[i], generated[i], cfg);
    s.psnr += psnr(truth[i], generated[i], cfg);
    s.sharp_diff += sharpness_difference(truth[i], generated[i], cfg);
  }
  s.ssim /= s.frames;
  s.psnr /= s.frames;
  s.sharp_diff /= s.frames;
  return s;
}

std::string to_json(const SynthesisScores& s) {
  const nlohmann::json j = {{"frames", s.frames},  {"is_all", s.is_all}, {"is_top1", s.is_top1},
                            {"is_top5", s.is_top5}, {"ssim", s.ssim},     {"psnr", s.psnr},
                            {"sharp_diff", s.sharp_diff}};
  return j.dump(2);
}

std::string to_csv(const SynthesisScores& s) {
  std::ostringstream os;
  os.precision(10);
  os << "frames,is_all,is_top1,is_top5,ssim,psnr,sharp_diff\n"
     << s.frames << ',' << s.is_all << ',' << s.is_top1 << ',' << s.is_top5 << ',' << s.ssim << ',' << s.psnr << ','
     << s.sharp_diff << '\n';
  return os.str();
}

}  // namespace egoexo::metrics
