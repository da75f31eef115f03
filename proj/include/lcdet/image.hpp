#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lcdet {

// 8-bit grayscale image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  uint8_t at(int x, int y) const { return pixels[size_t(y) * width + x]; }
  uint8_t& at(int x, int y) { return pixels[size_t(y) * width + x]; }

  static GrayImage filled(int width, int height, uint8_t value);
};

// Floating-point working image used inside the descriptor path so resampling
// never rounds back to 8 bits.
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int x, int y) const { return pixels[size_t(y) * width + x]; }

  static ImageF from(const GrayImage& img);
};

// PGM (P5) or PNG, decided by content. PNG input is converted to 8-bit gray.
GrayImage load_image(const std::filesystem::path& path);

void save_pgm(const GrayImage& img, const std::filesystem::path& path);

// Bilinear resample.
ImageF resample_bilinear(const GrayImage& img, int width, int height);

}  // namespace lcdet
