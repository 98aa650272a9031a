#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tapaudit {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGBA raster, row-major, no padding.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {255, 255, 255});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  // Coordinates outside the image are ignored.
  void fill_rect(int x, int y, int w, int h, Rgb c);
  // Copies `src` with its top-left corner at (x, y), clipped to this image.
  void blit(const Image& src, int x, int y);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

std::vector<std::uint8_t> encode_png(const Image& image);
// Throws ValidationError for data that is not a decodable PNG.
Image decode_png(std::span<const std::uint8_t> data);

Image read_png_file(const std::string& path);
void write_png_file(const Image& image, const std::string& path);

// Text in a built-in 5x7 bitmap font covering digits, '.', '%' and '-'.
// Unknown characters render as blanks. `scale` multiplies the glyph size.
void draw_text(Image& image, int x, int y, const std::string& text, int scale, Rgb color);
int text_width(const std::string& text, int scale);
int text_height(int scale);

}  // namespace tapaudit
