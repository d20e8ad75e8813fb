#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "egoexo/error.hpp"
#include "egoexo/flow.hpp"
#include "egoexo/toygen.hpp"

using namespace egoexo;
namespace fs = std::filesystem;

namespace {

// Smooth texture, shifted right by `dx` pixels and down by `dy`.
Frame texture(int size, double dx, double dy) {
  Frame f(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = x - dx;
      const double v = y - dy;
      const double val = 128.0 + 50.0 * std::sin(0.35 * u) * std::cos(0.27 * v) + 30.0 * std::sin(0.19 * (u + v));
      const auto c = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
      f.set_rgb(y, x, c, c, c);
    }
  }
  return f;
}

double interior_median(const FlowField& f, bool horizontal) {
  std::vector<double> v;
  for (int y = 8; y < f.height() - 8; ++y) {
    for (int x = 8; x < f.width() - 8; ++x) v.push_back(horizontal ? f.dx(y, x) : f.dy(y, x));
  }
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

FlowSequence random_sequence(std::uint64_t seed, int n, int h, int w) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 2.0f);
  FlowSequence fs;
  for (int t = 0; t < n; ++t) {
    FlowField f(h, w, t + 1);
    for (auto& v : f.vectors()) v = g(rng);
    fs.flows.push_back(std::move(f));
  }
  return fs;
}

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no egoexo::Error thrown";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(GaussianKernel, ShapeAndNormalization) {
  EXPECT_EQ(gaussian_kernel(0.0), std::vector<double>{1.0});
  const auto k = gaussian_kernel(1.5);
  ASSERT_EQ(k.size(), 11u);
  double sum = 0.0;
  for (double v : k) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(k[5] / k[6], std::exp(0.5 / 2.25), 1e-12);
  EXPECT_EQ(kind_of([] { gaussian_kernel(-0.1); }), ErrorKind::NegativeSigma);
}

TEST(SmoothTemporal, BoundaryRenormalizationOracle) {
  FlowSequence fs;
  for (float v : {1.0f, 2.0f, 4.0f}) {
    FlowField f(1, 1);
    f.dx(0, 0) = v;
    f.dy(0, 0) = -v;
    fs.flows.push_back(f);
  }
  const auto out = smooth_temporal(fs, 1.0);
  const double w0 = 1.0;
  const double w1 = std::exp(-0.5);
  const double w2 = std::exp(-2.0);
  EXPECT_NEAR(out.flows[0].dx(0, 0), (w0 * 1 + w1 * 2 + w2 * 4) / (w0 + w1 + w2), 1e-6);
  EXPECT_NEAR(out.flows[1].dx(0, 0), (w1 * 1 + w0 * 2 + w1 * 4) / (w0 + 2 * w1), 1e-6);
  EXPECT_NEAR(out.flows[2].dy(0, 0), -(w2 * 1 + w1 * 2 + w0 * 4) / (w0 + w1 + w2), 1e-6);
  EXPECT_DOUBLE_EQ(out.smoothing_sigma, 1.0);
}

TEST(SmoothTemporal, ZeroSigmaIsIdentity) {
  const auto fs = random_sequence(1, 5, 3, 4);
  const auto out = smooth_temporal(fs, 0.0);
  for (std::size_t t = 0; t < fs.flows.size(); ++t) EXPECT_EQ(out.flows[t], fs.flows[t]);
}

TEST(SmoothTemporal, Linear) {
  const auto a = random_sequence(2, 9, 3, 3);
  const auto b = random_sequence(3, 9, 3, 3);
  FlowSequence sum = a;
  for (std::size_t t = 0; t < sum.flows.size(); ++t) {
    for (std::size_t i = 0; i < sum.flows[t].vectors().size(); ++i) {
      sum.flows[t].vectors()[i] = 2.0f * a.flows[t].vectors()[i] + b.flows[t].vectors()[i];
    }
  }
  const auto sa = smooth_temporal(a, 1.5);
  const auto sb = smooth_temporal(b, 1.5);
  const auto ss = smooth_temporal(sum, 1.5);
  for (std::size_t t = 0; t < ss.flows.size(); ++t) {
    for (std::size_t i = 0; i < ss.flows[t].vectors().size(); ++i) {
      EXPECT_NEAR(ss.flows[t].vectors()[i], 2.0f * sa.flows[t].vectors()[i] + sb.flows[t].vectors()[i], 1e-5);
    }
  }
}

TEST(SmoothTemporal, NonExpansiveAndConstantPreserving) {
  const auto fs = random_sequence(4, 12, 4, 4);
  float in_max = 0.0f;
  for (const auto& f : fs.flows) {
    for (float v : f.vectors()) in_max = std::max(in_max, std::abs(v));
  }
  for (double sigma : {0.5, 1.5, 4.0}) {
    for (const auto& f : smooth_temporal(fs, sigma).flows) {
      for (float v : f.vectors()) EXPECT_LE(std::abs(v), in_max + 1e-5f);
    }
  }
  FlowSequence constant;
  for (int t = 0; t < 6; ++t) {
    FlowField f(2, 2, t + 1);
    for (auto& v : f.vectors()) v = 3.25f;
    constant.flows.push_back(f);
  }
  const auto out = smooth_temporal(constant, 2.0);
  for (std::size_t t = 0; t < out.flows.size(); ++t) {
    EXPECT_EQ(out.flows[t].source_time(), static_cast<int>(t) + 1);
    for (float v : out.flows[t].vectors()) EXPECT_NEAR(v, 3.25f, 1e-6f);
  }
}

TEST(SmoothTemporal, Errors) {
  auto fs = random_sequence(5, 3, 2, 2);
  EXPECT_EQ(kind_of([&] { smooth_temporal(fs, -1.0); }), ErrorKind::NegativeSigma);
  fs.flows.push_back(FlowField(3, 2));
  EXPECT_EQ(kind_of([&] { smooth_temporal(fs, 1.0); }), ErrorKind::SizeMismatch);
}

TEST(Estimator, ZeroMotion) {
  const auto f = texture(48, 0.0, 0.0);
  const auto flow = compute_flow(f, f);
  EXPECT_TRUE(flow.all_finite());
  for (float v : flow.vectors()) EXPECT_NEAR(v, 0.0f, 1e-3f);
}

TEST(Estimator, RecoversTranslation) {
  for (auto [dx, dy] : {std::pair{1.0, 0.0}, std::pair{0.0, -1.0}, std::pair{2.0, 1.5}}) {
    const auto flow = compute_flow(texture(64, 0.0, 0.0), texture(64, dx, dy));
    EXPECT_NEAR(interior_median(flow, true), dx, 0.2) << dx << "," << dy;
    EXPECT_NEAR(interior_median(flow, false), dy, 0.2) << dx << "," << dy;
  }
}

TEST(Estimator, Errors) {
  EXPECT_EQ(kind_of([] { compute_flow(Frame(8, 8), Frame(8, 9)); }), ErrorKind::SizeMismatch);
}

TEST(FlowSequence, StampsSourceTimes) {
  std::vector<Frame> frames{texture(24, 0, 0), texture(24, 1, 0), texture(24, 2, 0)};
  const auto fs = compute_flow_sequence(frames, GradientFlowEstimator());
  ASSERT_EQ(fs.flows.size(), 2u);
  EXPECT_EQ(fs.flows[0].source_time(), 1);
  EXPECT_EQ(fs.flows[1].source_time(), 2);
}

TEST(FlowFiles, WriteSplitLayout) {
  const auto dir = fs::temp_directory_path() / "egoexo_test_flow";
  fs::remove_all(dir);
  toygen::DatasetOptions o;
  o.scenes = 1;
  o.sequences_per_scene = 2;
  o.length = 4;
  o.image_size = 24;
  const auto m = toygen::generate_dataset(o, dir / "data");
  const int n = write_flow_split(m, Split::train, GradientFlowEstimator(), 1.5, dir / "flow");
  const auto train = sequences_in(m, Split::train);
  EXPECT_EQ(n, static_cast<int>(train.size()) * 2 * 3);
  const auto path = flow_file(dir / "flow", train[0]->id, "exo", 3);
  EXPECT_EQ(path.filename(), "000003.flo");
  const auto f = read_flow(path);
  EXPECT_EQ(f.height(), 24);
  EXPECT_FALSE(fs::exists(flow_file(dir / "flow", train[0]->id, "ego", 0)));
}
