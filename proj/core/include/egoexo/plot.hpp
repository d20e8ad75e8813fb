#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "egoexo/image.hpp"

namespace egoexo::plot {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  int width = 640;
  int height = 480;
  std::optional<std::pair<double, double>> x_range;
  std::optional<std::pair<double, double>> y_range;
  int grid_lines = 5;
};

/// Rasterized line chart: axes box, grid and one colored polyline per series.
Frame render_line_plot(const std::vector<Series>& series, const PlotOptions& opts = {});
void write_line_plot(const std::filesystem::path& png, const std::vector<Series>& series, const PlotOptions& opts = {});

/// One series: "<x_name>,<y_name>" rows. Several: "series,<x_name>,<y_name>".
void write_csv(const std::filesystem::path& csv, const std::vector<Series>& series, const std::string& x_name = "x",
               const std::string& y_name = "y");
std::vector<Series> read_csv(const std::filesystem::path& csv);

}  // namespace egoexo::plot
