#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace egoexo {

/// 8-bit RGB raster, row-major, channels interleaved.
class Frame {
 public:
  static constexpr int kChannels = 3;

  Frame() = default;
  Frame(int height, int width, std::uint8_t fill = 0);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t& at(int y, int x, int c) { return pixels_[index(y, x, c)]; }
  std::uint8_t at(int y, int x, int c) const { return pixels_[index(y, x, c)]; }

  void set_rgb(int y, int x, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &pixels_[index(y, x, 0)];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  std::span<std::uint8_t> pixels() noexcept { return pixels_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  bool operator==(const Frame&) const = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Per-pixel displacement (dx, dy) in pixels between frame `source_time - 1`
/// and frame `source_time`.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int height, int width, int source_time = 0);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int source_time() const noexcept { return source_time_; }
  void set_source_time(int t) noexcept { source_time_ = t; }

  float& dx(int y, int x) { return vectors_[index(y, x)]; }
  float& dy(int y, int x) { return vectors_[index(y, x) + 1]; }
  float dx(int y, int x) const { return vectors_[index(y, x)]; }
  float dy(int y, int x) const { return vectors_[index(y, x) + 1]; }

  std::span<float> vectors() noexcept { return vectors_; }
  std::span<const float> vectors() const noexcept { return vectors_; }

  bool all_finite() const;
  bool operator==(const FlowField&) const = default;

 private:
  std::size_t index(int y, int x) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * 2;
  }

  int height_ = 0;
  int width_ = 0;
  int source_time_ = 0;
  std::vector<float> vectors_;
};

inline constexpr int kSynthesisSize = 256;

/// Bilinear resampling with corner-aligned sampling grids, so the four corner
/// pixels of the output equal those of the input.
Frame resize_bilinear(const Frame& src, int height, int width);

/// Resize to the 256x256 generator input.
Frame resize_for_synthesis(const Frame& f);

/// Bilinear resize of a flow field; vectors are rescaled by the same factor as
/// the pixel grid along each axis.
FlowField resize_flow(const FlowField& src, int height, int width);

/// Luma 0.299 R + 0.587 G + 0.114 B, row-major, in [0, 255].
std::vector<double> to_luma(const Frame& f);

Frame read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Frame& f);

/// `EFLO` little-endian layout: magic, u32 height, u32 width, H*W*2 float32.
FlowField read_flow(const std::filesystem::path& path);
void write_flow(const std::filesystem::path& path, const FlowField& flow);

}  // namespace egoexo
