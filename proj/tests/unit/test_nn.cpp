#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "egoexo/error.hpp"
#include "egoexo/nn/adam.hpp"
#include "egoexo/nn/checkpoint.hpp"
#include "egoexo/nn/layers.hpp"

using namespace egoexo;
using namespace egoexo::nn;
namespace fs = std::filesystem;

namespace {

Tensor<double> random_tensor(std::mt19937_64& rng, int n, int c, int h, int w) {
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor<double> t(n, c, h, w);
  for (auto& v : t.values()) v = g(rng);
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Checks backward against central differences of loss = <r, layer(x)> for
// every input and parameter coordinate.
void expect_gradients(Layer<double>& layer, Tensor<double> x, std::mt19937_64& rng, double tol = 1e-6) {
  const auto y0 = layer.forward(x);
  const auto r = random_tensor(rng, y0.n(), y0.c(), y0.h(), y0.w());
  std::vector<Parameter<double>*> params;
  layer.collect(params);
  zero_grad(params);
  layer.forward(x);
  const auto dx = layer.backward(r);
  auto loss = [&] { return dot(r, layer.forward(x)); };
  const double h = 1e-5;
  auto check = [&](double& slot, double analytic, const std::string& what) {
    const double old = slot;
    slot = old + h;
    const double lp = loss();
    slot = old - h;
    const double lm = loss();
    slot = old;
    const double num = (lp - lm) / (2 * h);
    EXPECT_NEAR(analytic, num, tol * std::max(1.0, std::abs(num))) << what;
  };
  for (std::size_t i = 0; i < x.size(); ++i) check(x[i], dx[i], "input " + std::to_string(i));
  for (auto* p : params) {
    const auto grad = p->grad;
    for (std::size_t i = 0; i < p->value.size(); ++i) check(p->value[i], grad[i], p->name + " " + std::to_string(i));
  }
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

TEST(Tensor, ShapeAndConcat) {
  Tensor<float> a(2, 1, 2, 2, 1.0f);
  Tensor<float> b(2, 3, 2, 2, 2.0f);
  const auto c = concat_channels(a, b);
  EXPECT_EQ(c.shape(), (std::array<int, 4>{2, 4, 2, 2}));
  EXPECT_EQ(c.at(1, 0, 1, 1), 1.0f);
  EXPECT_EQ(c.at(1, 3, 0, 0), 2.0f);
  Tensor<float> sa, sb;
  split_channels(c, 1, sa, sb);
  EXPECT_EQ(sa, a);
  EXPECT_EQ(sb, b);
  EXPECT_EQ(kind_of([] { Tensor<float>(1, -1, 1, 1); }), ErrorKind::ShapeError);
  EXPECT_EQ(kind_of([&] { a += b; }), ErrorKind::ShapeError);
  EXPECT_EQ(kind_of([&] { a.reshape(3, 1, 1, 1); }), ErrorKind::ShapeError);
}

TEST(Conv2d, MatchesDirectConvolution) {
  std::mt19937_64 rng(1);
  Conv2d<double> conv("c", 2, 3, 3, 2, 1, rng, 0.5);
  std::vector<Parameter<double>*> ps;
  conv.collect(ps);
  auto& w = ps[0]->value;
  auto& b = ps[1]->value;
  for (auto& v : b.values()) v = std::normal_distribution<double>(0, 1)(rng);
  const auto x = random_tensor(rng, 2, 2, 7, 6);
  const auto y = conv.infer(x);
  ASSERT_EQ(y.shape(), (std::array<int, 4>{2, 3, 4, 3}));
  for (int n = 0; n < 2; ++n) {
    for (int o = 0; o < 3; ++o) {
      for (int oy = 0; oy < 4; ++oy) {
        for (int ox = 0; ox < 3; ++ox) {
          double acc = b[o];
          for (int c = 0; c < 2; ++c) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = oy * 2 - 1 + ky;
                const int ix = ox * 2 - 1 + kx;
                if (iy < 0 || iy >= 7 || ix < 0 || ix >= 6) continue;
                acc += w.at(o, c, ky, kx) * x.at(n, c, iy, ix);
              }
            }
          }
          EXPECT_NEAR(y.at(n, o, oy, ox), acc, 1e-12);
        }
      }
    }
  }
}

TEST(ConvTranspose2d, MatchesDirectScatter) {
  std::mt19937_64 rng(2);
  ConvTranspose2d<double> up("u", 3, 2, 4, 2, 1, rng, 0.5);
  std::vector<Parameter<double>*> ps;
  up.collect(ps);
  const auto& w = ps[0]->value;
  const auto x = random_tensor(rng, 1, 3, 3, 4);
  const auto y = up.infer(x);
  ASSERT_EQ(y.shape(), (std::array<int, 4>{1, 2, 6, 8}));
  Tensor<double> expect(1, 2, 6, 8);
  for (int c = 0; c < 3; ++c) {
    for (int iy = 0; iy < 3; ++iy) {
      for (int ix = 0; ix < 4; ++ix) {
        for (int o = 0; o < 2; ++o) {
          for (int ky = 0; ky < 4; ++ky) {
            for (int kx = 0; kx < 4; ++kx) {
              const int oy = iy * 2 - 1 + ky;
              const int ox = ix * 2 - 1 + kx;
              if (oy < 0 || oy >= 6 || ox < 0 || ox >= 8) continue;
              expect.at(0, o, oy, ox) += x.at(0, c, iy, ix) * w.at(c, o, ky, kx);
            }
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], expect[i], 1e-12);
}

TEST(Gradients, Conv2d) {
  std::mt19937_64 rng(3);
  Conv2d<double> conv("c", 2, 3, 4, 2, 1, rng, 0.3);
  expect_gradients(conv, random_tensor(rng, 2, 2, 6, 6), rng);
}

TEST(Gradients, ConvTranspose2d) {
  std::mt19937_64 rng(4);
  ConvTranspose2d<double> up("u", 3, 2, 4, 2, 1, rng, 0.3);
  expect_gradients(up, random_tensor(rng, 2, 3, 3, 3), rng);
}

TEST(Gradients, InstanceNorm) {
  std::mt19937_64 rng(5);
  InstanceNorm2d<double> norm("n", 3);
  expect_gradients(norm, random_tensor(rng, 2, 3, 4, 4), rng);
}

TEST(Gradients, BatchNorm) {
  std::mt19937_64 rng(6);
  BatchNorm2d<double> norm("b", 2);
  expect_gradients(norm, random_tensor(rng, 3, 2, 3, 3), rng);
}

TEST(Gradients, LinearAndPooling) {
  std::mt19937_64 rng(7);
  Sequential<double> net;
  net.add<GlobalAvgPool<double>>();
  net.add<Linear<double>>("fc", 4, 3, rng);
  net.add<Tanh<double>>();
  expect_gradients(net, random_tensor(rng, 2, 4, 3, 3), rng);
}

TEST(Gradients, Activations) {
  std::mt19937_64 rng(8);
  // Keep inputs away from the kink so finite differences stay one-sided.
  auto x = random_tensor(rng, 1, 2, 4, 4);
  for (auto& v : x.values()) v += v >= 0 ? 0.1 : -0.1;
  LeakyReLU<double> leaky(0.2);
  expect_gradients(leaky, x, rng);
  ReLU<double> relu;
  expect_gradients(relu, x, rng);
}

TEST(InstanceNorm, NormalizesEachPlane) {
  std::mt19937_64 rng(9);
  InstanceNorm2d<double> norm("n", 2);
  const auto y = norm.infer(random_tensor(rng, 2, 2, 5, 5));
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 2; ++c) {
      double m = 0.0, v = 0.0;
      for (int i = 0; i < 25; ++i) m += y.at(n, c, i / 5, i % 5);
      m /= 25;
      for (int i = 0; i < 25; ++i) v += std::pow(y.at(n, c, i / 5, i % 5) - m, 2);
      EXPECT_NEAR(m, 0.0, 1e-12);
      EXPECT_NEAR(v / 25, 1.0, 1e-3);
    }
  }
}

TEST(BatchNorm, RunningStatsUsedAtInference) {
  std::mt19937_64 rng(10);
  BatchNorm2d<double> norm("b", 1, 1.0);
  Tensor<double> x(2, 1, 1, 2);
  x[0] = 1.0;
  x[1] = 3.0;
  x[2] = 5.0;
  x[3] = 7.0;
  norm.forward(x);
  // Momentum 1 copies the batch statistics: mean 4, unbiased variance 20/3.
  const auto y = norm.infer(Tensor<double>(1, 1, 1, 1, 4.0 + std::sqrt(20.0 / 3.0 + 1e-5)));
  EXPECT_NEAR(y[0], 1.0, 1e-9);
  std::vector<Buffer<double>> bufs;
  norm.collect_buffers(bufs);
  EXPECT_EQ(bufs.size(), 2u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter<double> p("p", Tensor<double>(1, 1, 1, 3), ParamGroup::conv);
  p.grad[0] = 0.5;
  p.grad[1] = -2.0;
  p.grad[2] = 0.0;
  Adam<double> opt({&p}, {0.01, 0.9, 0.999, 1e-8});
  opt.step();
  // Bias correction makes the first update lr * sign(g).
  EXPECT_NEAR(p.value[0], -0.01, 1e-9);
  EXPECT_NEAR(p.value[1], 0.01, 1e-9);
  EXPECT_DOUBLE_EQ(p.value[2], 0.0);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, SecondStepOracle) {
  Parameter<double> p("p", Tensor<double>(1, 1, 1, 1), ParamGroup::conv);
  Adam<double> opt({&p}, {0.1, 0.5, 0.9, 0.0});
  p.grad[0] = 1.0;
  opt.step();
  p.grad[0] = 3.0;
  opt.step();
  const double m = 0.5 * 0.5 * 1.0 + 0.5 * 3.0;
  const double v = 0.9 * 0.1 * 1.0 + 0.1 * 9.0;
  const double update = 0.1 * (m / (1 - 0.25)) / std::sqrt(v / (1 - 0.81));
  EXPECT_NEAR(p.value[0], -0.1 - update, 1e-12);
}

TEST(Adam, FrozenGroupsUntouched) {
  Parameter<double> a("a", Tensor<double>(1, 1, 1, 1, 1.0), ParamGroup::conv);
  Parameter<double> b("b", Tensor<double>(1, 1, 1, 1, 1.0), ParamGroup::head);
  a.grad[0] = b.grad[0] = 1.0;
  Adam<double> opt({&a, &b}, {});
  opt.freeze(ParamGroup::head);
  for (int i = 0; i < 5; ++i) opt.step();
  EXPECT_LT(a.value[0], 1.0);
  EXPECT_DOUBLE_EQ(b.value[0], 1.0);
  opt.unfreeze(ParamGroup::head);
  EXPECT_FALSE(opt.is_frozen(ParamGroup::head));
}

TEST(Checkpoint, RoundTripAndAdamState) {
  std::mt19937_64 rng(11);
  Conv2d<float> conv("c", 2, 2, 3, 1, 1, rng);
  std::vector<Parameter<float>*> ps;
  conv.collect(ps);
  for (auto* p : ps) p->grad.fill(0.25f);
  Adam<float> opt(ps, {});
  opt.step();
  opt.step();

  Checkpoint ck;
  ck.kind = "unit";
  ck.config_json = "{\"a\": 1}";
  ck.step = 2;
  ck.epoch = 1;
  ck.params = export_params(ps);
  export_adam(opt, "opt", ck.optimizer);
  const auto path = fs::temp_directory_path() / "egoexo_test_nn" / "ck.eeck";
  save_checkpoint(path, ck);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back.kind, "unit");
  EXPECT_EQ(back.config_json, ck.config_json);
  EXPECT_EQ(back.step, 2);
  ASSERT_NE(back.find_param("c.weight"), nullptr);

  std::mt19937_64 other(99);
  Conv2d<float> conv2("c", 2, 2, 3, 1, 1, other);
  std::vector<Parameter<float>*> ps2;
  conv2.collect(ps2);
  Adam<float> opt2(ps2, {});
  import_params(back.params, ps2);
  import_adam(back.optimizer, "opt", opt2);
  EXPECT_EQ(ps2[0]->value, ps[0]->value);
  EXPECT_EQ(opt2.steps(), 2);
  EXPECT_EQ(opt2.first_moments()[0], opt.first_moments()[0]);
}

TEST(Checkpoint, Incompatibilities) {
  std::mt19937_64 rng(12);
  Conv2d<float> small("c", 2, 2, 3, 1, 1, rng);
  Conv2d<float> large("c", 2, 4, 3, 1, 1, rng);
  std::vector<Parameter<float>*> ps, pl;
  small.collect(ps);
  large.collect(pl);
  const auto arrays = export_params(ps);
  EXPECT_EQ(kind_of([&] { import_params(arrays, pl); }), ErrorKind::CheckpointIncompatible);
  EXPECT_EQ(kind_of([&] { import_params(std::vector<NamedArray>{}, ps); }), ErrorKind::CheckpointIncompatible);

  const auto dir = fs::temp_directory_path() / "egoexo_test_nn";
  fs::create_directories(dir);
  std::ofstream(dir / "junk.eeck") << "JUNKJUNKJUNK";
  EXPECT_EQ(kind_of([&] { load_checkpoint(dir / "junk.eeck"); }), ErrorKind::CheckpointIncompatible);
  EXPECT_EQ(kind_of([&] { load_checkpoint(dir / "absent.eeck"); }), ErrorKind::MissingFile);

  Checkpoint ck;
  ck.params = arrays;
  save_checkpoint(dir / "trunc.eeck", ck);
  fs::resize_file(dir / "trunc.eeck", fs::file_size(dir / "trunc.eeck") - 8);
  EXPECT_EQ(kind_of([&] { load_checkpoint(dir / "trunc.eeck"); }), ErrorKind::CheckpointIncompatible);
}
