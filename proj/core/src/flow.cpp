#include "egoexo/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "egoexo/error.hpp"

namespace egoexo {

namespace {

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(int width, int height, double fill = 0.0) : w(width), h(height), v(static_cast<std::size_t>(width) * height, fill) {}

  double& operator()(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double operator()(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }

  double clamped(int x, int y) const { return (*this)(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); }

  double sample(double x, double y) const {
    x = std::clamp(x, 0.0, w - 1.0);
    y = std::clamp(y, 0.0, h - 1.0);
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    return (1 - fy) * ((1 - fx) * (*this)(x0, y0) + fx * (*this)(x1, y0)) +
           fy * ((1 - fx) * (*this)(x0, y1) + fx * (*this)(x1, y1));
  }
};

Plane luma_plane(const Frame& f) {
  Plane p(f.width(), f.height());
  p.v = to_luma(f);
  return p;
}

Plane blur(const Plane& in, double sigma) {
  if (sigma <= 0.0) return in;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  Plane tmp(in.w, in.h);
  Plane out(in.w, in.h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * in.clamped(x + i, y);
      tmp(x, y) = s;
    }
  }
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * tmp.clamped(x, y + i);
      out(x, y) = s;
    }
  }
  return out;
}

Plane downsample(const Plane& in) {
  const Plane b = blur(in, 1.0);
  Plane out(std::max(1, in.w / 2), std::max(1, in.h / 2));
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out(x, y) = 0.25 * (b.clamped(2 * x, 2 * y) + b.clamped(2 * x + 1, 2 * y) + b.clamped(2 * x, 2 * y + 1) +
                          b.clamped(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

Plane upsample(const Plane& in, int w, int h, double scale) {
  Plane out(w, h);
  const double sx = static_cast<double>(in.w) / w;
  const double sy = static_cast<double>(in.h) / h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(x, y) = scale * in.sample((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
  }
  return out;
}

Plane box3(const Plane& in) {
  Plane out(in.w, in.h);
  for (int y = 0; y < in.h; ++y) {
    for (int x = 0; x < in.w; ++x) {
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) s += in.clamped(x + dx, y + dy);
      }
      out(x, y) = s / 9.0;
    }
  }
  return out;
}

void refine(const Plane& a, const Plane& b, Plane& u, Plane& v, const GradientFlowOptions& opts) {
  const int w = a.w;
  const int h = a.h;
  for (int it = 0; it < opts.iterations; ++it) {
    Plane warped(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) warped(x, y) = b.sample(x + u(x, y), y + v(x, y));
    }
    Plane jxx(w, h), jxy(w, h), jyy(w, h), jxt(w, h), jyt(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double ix = 0.25 * (a.clamped(x + 1, y) - a.clamped(x - 1, y) + warped.clamped(x + 1, y) -
                                  warped.clamped(x - 1, y));
        const double iy = 0.25 * (a.clamped(x, y + 1) - a.clamped(x, y - 1) + warped.clamped(x, y + 1) -
                                  warped.clamped(x, y - 1));
        const double itt = warped(x, y) - a(x, y);
        jxx(x, y) = ix * ix;
        jxy(x, y) = ix * iy;
        jyy(x, y) = iy * iy;
        jxt(x, y) = ix * itt;
        jyt(x, y) = iy * itt;
      }
    }
    jxx = blur(jxx, opts.window_sigma);
    jxy = blur(jxy, opts.window_sigma);
    jyy = blur(jyy, opts.window_sigma);
    jxt = blur(jxt, opts.window_sigma);
    jyt = blur(jyt, opts.window_sigma);
    const Plane ubar = box3(u);
    const Plane vbar = box3(v);
    const double alpha = opts.smoothness;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double a11 = jxx(x, y) + alpha;
        const double a12 = jxy(x, y);
        const double a22 = jyy(x, y) + alpha;
        const double r1 = -jxt(x, y) + alpha * (ubar(x, y) - u(x, y));
        const double r2 = -jyt(x, y) + alpha * (vbar(x, y) - v(x, y));
        const double det = a11 * a22 - a12 * a12;
        if (!(det > 0.0)) continue;
        u(x, y) += (a22 * r1 - a12 * r2) / det;
        v(x, y) += (a11 * r2 - a12 * r1) / det;
      }
    }
  }
}

}  // namespace

FlowField GradientFlowEstimator::estimate(const Frame& prev, const Frame& next) const {
  if (prev.height() != next.height() || prev.width() != next.width()) {
    fail(ErrorKind::SizeMismatch, "flow frames must have equal size");
  }
  if (prev.empty()) fail(ErrorKind::ShapeError, "empty frame");

  std::vector<Plane> pa{luma_plane(prev)};
  std::vector<Plane> pb{luma_plane(next)};
  for (int l = 1; l < opts_.levels && pa.back().w >= 16 && pa.back().h >= 16; ++l) {
    pa.push_back(downsample(pa.back()));
    pb.push_back(downsample(pb.back()));
  }

  Plane u(pa.back().w, pa.back().h);
  Plane v(pa.back().w, pa.back().h);
  for (int l = static_cast<int>(pa.size()) - 1; l >= 0; --l) {
    const auto& a = pa[l];
    if (u.w != a.w || u.h != a.h) {
      u = upsample(u, a.w, a.h, static_cast<double>(a.w) / u.w);
      v = upsample(v, a.w, a.h, static_cast<double>(a.h) / v.h);
    }
    refine(a, pb[l], u, v, opts_);
  }

  FlowField out(prev.height(), prev.width());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.dx(y, x) = static_cast<float>(u(x, y));
      out.dy(y, x) = static_cast<float>(v(x, y));
    }
  }
  return out;
}

FlowField compute_flow(const Frame& prev, const Frame& next) {
  static const GradientFlowEstimator estimator;
  return estimator.estimate(prev, next);
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma < 0.0) fail(ErrorKind::NegativeSigma, "sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& x : k) x /= sum;
  return k;
}

FlowSequence smooth_temporal(const FlowSequence& fs, double sigma) {
  if (sigma < 0.0) fail(ErrorKind::NegativeSigma, "sigma must be >= 0");
  FlowSequence out;
  out.smoothing_sigma = sigma;
  if (sigma == 0.0 || fs.flows.empty()) {
    out.flows = fs.flows;
    return out;
  }
  const auto& first = fs.flows.front();
  for (const auto& f : fs.flows) {
    if (f.height() != first.height() || f.width() != first.width()) {
      fail(ErrorKind::SizeMismatch, "flow sequence fields differ in size");
    }
  }
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int n = static_cast<int>(fs.flows.size());
  const std::size_t len = first.vectors().size();
  out.flows.reserve(n);
  for (int t = 0; t < n; ++t) {
    FlowField f(first.height(), first.width(), fs.flows[t].source_time());
    const int lo = std::max(0, t - r);
    const int hi = std::min(n - 1, t + r);
    double norm = 0.0;
    for (int s = lo; s <= hi; ++s) norm += k[s - t + r];
    auto dst = f.vectors();
    for (std::size_t i = 0; i < len; ++i) {
      double acc = 0.0;
      for (int s = lo; s <= hi; ++s) acc += k[s - t + r] * fs.flows[s].vectors()[i];
      dst[i] = static_cast<float>(acc / norm);
    }
    out.flows.push_back(std::move(f));
  }
  return out;
}

FlowSequence compute_flow_sequence(std::span<const Frame> frames, const FlowEstimator& estimator) {
  FlowSequence fs;
  for (std::size_t t = 1; t < frames.size(); ++t) {
    auto f = estimator.estimate(frames[t - 1], frames[t]);
    f.set_source_time(static_cast<int>(t));
    fs.flows.push_back(std::move(f));
  }
  return fs;
}

std::filesystem::path flow_file(const std::filesystem::path& dir, std::string_view sequence, std::string_view view,
                                int t) {
  char name[32];
  std::snprintf(name, sizeof name, "%06d.flo", t);
  return dir / std::string(sequence) / std::string(view) / name;
}

int write_flow_split(const Manifest& m, Split split, const FlowEstimator& estimator, double sigma,
                     const std::filesystem::path& out_dir) {
  int written = 0;
  for (const auto* s : sequences_in(m, split)) {
    for (const bool ego : {true, false}) {
      std::vector<Frame> frames;
      frames.reserve(s->length());
      for (int t = 0; t < static_cast<int>(s->length()); ++t) {
        frames.push_back(read_png(ego ? s->ego_frame_path(t) : s->exo_frame_path(t)));
      }
      const auto fs = smooth_temporal(compute_flow_sequence(frames, estimator), sigma);
      for (std::size_t i = 0; i < fs.flows.size(); ++i) {
        write_flow(flow_file(out_dir, s->id, ego ? "ego" : "exo", static_cast<int>(i) + 1), fs.flows[i]);
        ++written;
      }
    }
  }
  return written;
}

}  // namespace egoexo
