#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace satnerf {

struct ImageIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 8-bit rgb image; values exposed as doubles in [0,1] (v/255).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // row-major, 3 bytes per pixel

  double at(int row, int col, int ch) const {
    return rgb[3 * (row * width + col) + ch] / 255.0;
  }
  void set(int row, int col, int ch, double v) {
    const double q = v < 0 ? 0 : v > 1 ? 1 : v;
    rgb[3 * (row * width + col) + ch] =
        static_cast<uint8_t>(q * 255.0 + 0.5);
  }
  static Image blank(int w, int h) {
    Image im;
    im.width = w;
    im.height = h;
    im.rgb.assign(static_cast<size_t>(w) * h * 3, 0);
    return im;
  }
};

Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& im);

// Whole-file helpers used across the loaders.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& data);

}  // namespace satnerf
