#include "egoexo/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "egoexo/error.hpp"

namespace egoexo {

Frame::Frame(int height, int width, std::uint8_t fill) : height_(height), width_(width) {
  if (height <= 0 || width <= 0) {
    fail(ErrorKind::ShapeError, "frame dimensions must be positive");
  }
  pixels_.assign(static_cast<std::size_t>(height) * width * kChannels, fill);
}

FlowField::FlowField(int height, int width, int source_time)
    : height_(height), width_(width), source_time_(source_time) {
  if (height <= 0 || width <= 0) {
    fail(ErrorKind::ShapeError, "flow dimensions must be positive");
  }
  vectors_.assign(static_cast<std::size_t>(height) * width * 2, 0.0f);
}

bool FlowField::all_finite() const {
  return std::all_of(vectors_.begin(), vectors_.end(), [](float v) { return std::isfinite(v); });
}

namespace {

struct Tap {
  int i0;
  int i1;
  double frac;
};

// Corner-aligned source coordinates for each output index.
std::vector<Tap> make_taps(int src, int dst) {
  std::vector<Tap> taps(dst);
  const double scale = dst > 1 ? static_cast<double>(src - 1) / (dst - 1) : 0.0;
  for (int i = 0; i < dst; ++i) {
    const double s = i * scale;
    int i0 = static_cast<int>(std::floor(s));
    i0 = std::clamp(i0, 0, src - 1);
    const int i1 = std::min(i0 + 1, src - 1);
    taps[i] = {i0, i1, s - i0};
  }
  return taps;
}

}  // namespace

Frame resize_bilinear(const Frame& src, int height, int width) {
  if (src.empty()) fail(ErrorKind::ShapeError, "cannot resize an empty frame");
  if (src.height() == height && src.width() == width) return src;
  Frame out(height, width);
  const auto ty = make_taps(src.height(), height);
  const auto tx = make_taps(src.width(), width);
  for (int y = 0; y < height; ++y) {
    const auto& a = ty[y];
    for (int x = 0; x < width; ++x) {
      const auto& b = tx[x];
      for (int c = 0; c < Frame::kChannels; ++c) {
        const double top = (1.0 - b.frac) * src.at(a.i0, b.i0, c) + b.frac * src.at(a.i0, b.i1, c);
        const double bot = (1.0 - b.frac) * src.at(a.i1, b.i0, c) + b.frac * src.at(a.i1, b.i1, c);
        const double v = (1.0 - a.frac) * top + a.frac * bot;
        out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

Frame resize_for_synthesis(const Frame& f) { return resize_bilinear(f, kSynthesisSize, kSynthesisSize); }

FlowField resize_flow(const FlowField& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  FlowField out(height, width, src.source_time());
  const auto ty = make_taps(src.height(), height);
  const auto tx = make_taps(src.width(), width);
  const double sx = src.width() > 1 ? static_cast<double>(width - 1) / (src.width() - 1) : 1.0;
  const double sy = src.height() > 1 ? static_cast<double>(height - 1) / (src.height() - 1) : 1.0;
  auto sample = [&](const Tap& a, const Tap& b, auto get) {
    const double top = (1.0 - b.frac) * get(a.i0, b.i0) + b.frac * get(a.i0, b.i1);
    const double bot = (1.0 - b.frac) * get(a.i1, b.i0) + b.frac * get(a.i1, b.i1);
    return (1.0 - a.frac) * top + a.frac * bot;
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out.dx(y, x) = static_cast<float>(sx * sample(ty[y], tx[x], [&](int r, int c) { return src.dx(r, c); }));
      out.dy(y, x) = static_cast<float>(sy * sample(ty[y], tx[x], [&](int r, int c) { return src.dy(r, c); }));
    }
  }
  return out;
}

std::vector<double> to_luma(const Frame& f) {
  std::vector<double> y(static_cast<std::size_t>(f.height()) * f.width());
  const auto px = f.pixels();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
  }
  return y;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) fail(ErrorKind::MissingFile, "cannot open " + path.string());
  return f;
}

}  // namespace

Frame read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  std::array<unsigned char, 8> sig{};
  if (std::fread(sig.data(), 1, sig.size(), file.get()) != sig.size() || png_sig_cmp(sig.data(), 0, 8) != 0) {
    fail(ErrorKind::SchemaError, "not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::SchemaError, "corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  Frame frame(height, width);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = frame.pixels().data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return frame;
}

void write_png(const std::filesystem::path& path, const Frame& f) {
  if (f.empty()) fail(ErrorKind::ShapeError, "cannot write an empty frame");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::SchemaError, "PNG encode failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, f.width(), f.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto* base = const_cast<std::uint8_t*>(f.pixels().data());
  for (int y = 0; y < f.height(); ++y) png_write_row(png, base + static_cast<std::size_t>(y) * f.width() * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

namespace {

constexpr std::array<char, 4> kFlowMagic{'E', 'F', 'L', 'O'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char*>(b.data()), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

FlowField read_flow(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingFile, "cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || magic != kFlowMagic) fail(ErrorKind::SchemaError, "bad flow magic in " + path.string());
  const auto h = get_u32(in);
  const auto w = get_u32(in);
  if (!in || h == 0 || w == 0 || h > 1u << 15 || w > 1u << 15) {
    fail(ErrorKind::SchemaError, "bad flow header in " + path.string());
  }
  FlowField flow(static_cast<int>(h), static_cast<int>(w));
  for (float& v : flow.vectors()) {
    v = std::bit_cast<float>(get_u32(in));
  }
  if (!in) fail(ErrorKind::SchemaError, "truncated flow file " + path.string());
  return flow;
}

void write_flow(const std::filesystem::path& path, const FlowField& flow) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::MissingFile, "cannot create " + path.string());
  out.write(kFlowMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(flow.height()));
  put_u32(out, static_cast<std::uint32_t>(flow.width()));
  for (float v : flow.vectors()) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

}  // namespace egoexo
