#include "egoexo/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "egoexo/error.hpp"

namespace egoexo::plot {

namespace {

constexpr std::array<std::array<std::uint8_t, 3>, 6> kPalette{{
    {{31, 119, 180}}, {{214, 39, 40}}, {{44, 160, 44}}, {{255, 127, 14}}, {{148, 103, 189}}, {{127, 127, 127}},
}};

void dot(Frame& f, int x, int y, std::array<std::uint8_t, 3> c, int radius) {
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int px = x + dx;
      const int py = y + dy;
      if (px >= 0 && py >= 0 && px < f.width() && py < f.height()) f.set_rgb(py, px, c[0], c[1], c[2]);
    }
  }
}

void line(Frame& f, int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> c, int radius) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    dot(f, x0, y0, c, radius);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

std::pair<double, double> extent(const std::vector<Series>& series, bool use_x) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (double v : use_x ? s.x : s.y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12) return {lo - 0.5, hi + 0.5};
  return {lo, hi};
}

}  // namespace

Frame render_line_plot(const std::vector<Series>& series, const PlotOptions& opts) {
  Frame f(opts.height, opts.width, 255);
  const int left = opts.width / 10;
  const int right = opts.width - opts.width / 20;
  const int top = opts.height / 20;
  const int bottom = opts.height - opts.height / 10;
  const auto [x0, x1] = opts.x_range.value_or(extent(series, true));
  const auto [y0, y1] = opts.y_range.value_or(extent(series, false));
  auto px = [&](double x) { return left + static_cast<int>(std::lround((x - x0) / (x1 - x0) * (right - left))); };
  auto py = [&](double y) { return bottom - static_cast<int>(std::lround((y - y0) / (y1 - y0) * (bottom - top))); };

  const std::array<std::uint8_t, 3> grid{225, 225, 225};
  const std::array<std::uint8_t, 3> axis{0, 0, 0};
  for (int i = 1; i < opts.grid_lines; ++i) {
    const int gx = left + (right - left) * i / opts.grid_lines;
    const int gy = top + (bottom - top) * i / opts.grid_lines;
    line(f, gx, top, gx, bottom, grid, 0);
    line(f, left, gy, right, gy, grid, 0);
  }
  line(f, left, top, right, top, axis, 0);
  line(f, left, bottom, right, bottom, axis, 0);
  line(f, left, top, left, bottom, axis, 0);
  line(f, right, top, right, bottom, axis, 0);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const auto color = kPalette[k % kPalette.size()];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i + 1 < n; ++i) line(f, px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), color, 1);
    if (n == 1) dot(f, px(s.x[0]), py(s.y[0]), color, 2);
    // Legend swatch in the top-left corner.
    const int ly = top + 8 + static_cast<int>(k) * 10;
    line(f, left + 8, ly, left + 28, ly, color, 1);
  }
  return f;
}

void write_line_plot(const std::filesystem::path& png, const std::vector<Series>& series, const PlotOptions& opts) {
  write_png(png, render_line_plot(series, opts));
}

void write_csv(const std::filesystem::path& csv, const std::vector<Series>& series, const std::string& x_name,
               const std::string& y_name) {
  if (csv.has_parent_path()) std::filesystem::create_directories(csv.parent_path());
  std::ofstream os(csv);
  if (!os) fail(ErrorKind::MissingFile, "cannot write " + csv.string());
  os.precision(10);
  const bool single = series.size() == 1;
  os << (single ? "" : "series,") << x_name << ',' << y_name << '\n';
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!single) os << s.name << ',';
      os << s.x[i] << ',' << s.y[i] << '\n';
    }
  }
}

std::vector<Series> read_csv(const std::filesystem::path& csv) {
  std::ifstream is(csv);
  if (!is) fail(ErrorKind::MissingFile, "cannot open " + csv.string());
  std::string header;
  std::getline(is, header);
  const bool multi = header.rfind("series,", 0) == 0;
  std::vector<Series> out;
  std::map<std::string, std::size_t> index;
  std::string row;
  while (std::getline(is, row)) {
    if (row.empty()) continue;
    std::stringstream ss(row);
    std::string name = csv.stem().string();
    std::string xs, ys;
    if (multi) std::getline(ss, name, ',');
    std::getline(ss, xs, ',');
    std::getline(ss, ys, ',');
    auto [it, added] = index.try_emplace(name, out.size());
    if (added) out.push_back({name, {}, {}});
    try {
      out[it->second].x.push_back(std::stod(xs));
      out[it->second].y.push_back(std::stod(ys));
    } catch (const std::exception&) {
      fail(ErrorKind::SchemaError, "bad CSV row '" + row + "' in " + csv.string());
    }
  }
  return out;
}

}  // namespace egoexo::plot
