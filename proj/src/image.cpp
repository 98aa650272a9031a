#include "tapaudit/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include "tapaudit/errors.hpp"

namespace tapaudit {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw DomainError("image dimensions must be >= 0");
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 4);
  for (std::size_t i = 0; i < pixels_.size(); i += 4) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
    pixels_[i + 3] = 255;
  }
}

Rgb Image::at(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * width_ + x) * 4;
  return {pixels_.at(i), pixels_.at(i + 1), pixels_.at(i + 2)};
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  const auto i = (static_cast<std::size_t>(y) * width_ + x) * 4;
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
  pixels_[i + 3] = 255;
}

void Image::fill_rect(int x, int y, int w, int h, Rgb c) {
  const int x0 = std::max(x, 0);
  const int y0 = std::max(y, 0);
  const int x1 = std::min(x + w, width_);
  const int y1 = std::min(y + h, height_);
  for (int yy = y0; yy < y1; ++yy) {
    for (int xx = x0; xx < x1; ++xx) set(xx, yy, c);
  }
}

void Image::blit(const Image& src, int x, int y) {
  const int x0 = std::max(x, 0);
  const int x1 = std::min(x + src.width_, width_);
  if (x1 <= x0) return;
  for (int sy = 0; sy < src.height_; ++sy) {
    const int dy = y + sy;
    if (dy < 0 || dy >= height_) continue;
    const auto* from = &src.pixels_[(static_cast<std::size_t>(sy) * src.width_ + (x0 - x)) * 4];
    auto* to = &pixels_[(static_cast<std::size_t>(dy) * width_ + x0) * 4];
    std::memcpy(to, from, static_cast<std::size_t>(x1 - x0) * 4);
  }
}

namespace {

struct PngImageGuard {
  png_image* image;
  ~PngImageGuard() { png_image_free(image); }
};

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGBA;
  PngImageGuard guard{&png};

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels().data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels().data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(std::span<const std::uint8_t> data) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  PngImageGuard guard{&png};
  if (!png_image_begin_read_from_memory(&png, data.data(), data.size())) {
    throw ValidationError(std::string("not a PNG image: ") + png.message);
  }
  png.format = PNG_FORMAT_RGBA;
  Image out(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, out.pixels().data(), 0, nullptr)) {
    throw ValidationError(std::string("PNG decode failed: ") + png.message);
  }
  return out;
}

Image read_png_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open image " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

void write_png_file(const Image& image, const std::string& path) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr int kAdvance = kGlyphW + 1;

// One byte per row, low 5 bits, MSB = leftmost column.
const std::array<std::uint8_t, kGlyphH>* glyph(char c) {
  static const std::array<std::array<std::uint8_t, kGlyphH>, 10> digits{{
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},
      {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},
      {0x1E, 0x01, 0x01, 0x0E, 0x01, 0x01, 0x1E},
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},
      {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},
      {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
  }};
  static const std::array<std::uint8_t, kGlyphH> dot{0, 0, 0, 0, 0, 0x0C, 0x0C};
  static const std::array<std::uint8_t, kGlyphH> percent{0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03};
  static const std::array<std::uint8_t, kGlyphH> minus{0, 0, 0, 0x1F, 0, 0, 0};
  if (c >= '0' && c <= '9') return &digits[static_cast<std::size_t>(c - '0')];
  if (c == '.') return &dot;
  if (c == '%') return &percent;
  if (c == '-') return &minus;
  return nullptr;
}

}  // namespace

int text_width(const std::string& text, int scale) {
  if (text.empty()) return 0;
  return (static_cast<int>(text.size()) * kAdvance - 1) * scale;
}

int text_height(int scale) { return kGlyphH * scale; }

void draw_text(Image& image, int x, int y, const std::string& text, int scale, Rgb color) {
  int pen = x;
  for (char c : text) {
    if (const auto* rows = glyph(c)) {
      for (int row = 0; row < kGlyphH; ++row) {
        for (int col = 0; col < kGlyphW; ++col) {
          if ((*rows)[row] & (0x10 >> col)) {
            image.fill_rect(pen + col * scale, y + row * scale, scale, scale, color);
          }
        }
      }
    }
    pen += kAdvance * scale;
  }
}

}  // namespace tapaudit
