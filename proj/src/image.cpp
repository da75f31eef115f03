#include "lcdet/image.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <png.h>

#include "lcdet/error.hpp"

namespace lcdet {

namespace {

[[noreturn]] void io_fail(const std::filesystem::path& path,
                          const std::string& what) {
  fail(ErrorCode::io, path.string() + ": " + what);
}

// Skips whitespace and '#' comments in a PGM header.
int next_pgm_token(std::istream& in, const std::filesystem::path& path) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    break;
  }
  int value = -1;
  in >> value;
  if (!in || value < 0) io_fail(path, "malformed PGM header");
  return value;
}

GrayImage load_pgm(std::ifstream& in, const std::filesystem::path& path) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') io_fail(path, "not a P5 PGM file");

  GrayImage img;
  img.width = next_pgm_token(in, path);
  img.height = next_pgm_token(in, path);
  const int maxval = next_pgm_token(in, path);
  if (img.width <= 0 || img.height <= 0) io_fail(path, "bad PGM dimensions");
  if (maxval <= 0 || maxval > 255) io_fail(path, "only 8-bit PGM supported");
  in.get();  // single whitespace after maxval

  img.pixels.resize(size_t(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          std::streamsize(img.pixels.size()));
  if (!in) io_fail(path, "truncated PGM pixel data");
  return img;
}

GrayImage load_png(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) io_fail(path, "cannot open");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    io_fail(path, "libpng init failed");
  }

  GrayImage img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    io_fail(path, "PNG decode failed");
  }

  png_init_io(png, fp);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);

  img.width = int(png_get_image_width(png, info));
  img.height = int(png_get_image_height(png, info));
  img.pixels.resize(size_t(img.width) * img.height);
  rows.resize(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = img.pixels.data() + size_t(y) * img.width;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

}  // namespace

GrayImage GrayImage::filled(int width, int height, uint8_t value) {
  GrayImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(size_t(width) * height, value);
  return img;
}

ImageF ImageF::from(const GrayImage& img) {
  ImageF out;
  out.width = img.width;
  out.height = img.height;
  out.pixels.assign(img.pixels.begin(), img.pixels.end());
  return out;
}

GrayImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail(path, "cannot open");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  in.seekg(0);
  if (magic[0] == 'P' && magic[1] == '5') return load_pgm(in, path);
  in.close();
  const unsigned char png_magic[2] = {0x89, 'P'};
  if (uint8_t(magic[0]) == png_magic[0] && magic[1] == 'P') {
    return load_png(path);
  }
  io_fail(path, "unsupported image format (expected P5 PGM or PNG)");
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail(path, "cannot open for writing");
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            std::streamsize(img.pixels.size()));
  if (!out) io_fail(path, "write failed");
}

ImageF resample_bilinear(const GrayImage& img, int width, int height) {
  ImageF out;
  out.width = width;
  out.height = height;
  out.pixels.resize(size_t(width) * height);
  const double sx = double(img.width) / width;
  const double sy = double(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(int(fy), img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(int(fx), img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * img.at(x0, y0) + wx * img.at(x1, y0);
      const double bot = (1.0 - wx) * img.at(x0, y1) + wx * img.at(x1, y1);
      out.pixels[size_t(y) * width + x] = (1.0 - wy) * top + wy * bot;
    }
  }
  return out;
}

}  // namespace lcdet
