#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lcdet/image.hpp"

namespace lcdet {

enum class Quantization { bit, byte };

// Descriptor geometry and similarity parameters. Defaults give the
// 54-filter x 64-sample-point = 3456-dimensional byte descriptor.
struct DirdConfig {
  int segment_grid = 4;    // kernel placement offsets derive from this
  int filter_count = 54;   // must match the built filter bank
  int sample_grid = 8;     // sample points per axis
  int offset_stride = 2;   // 3x3 aggregation neighborhood stride, px
  Quantization quantization = Quantization::byte;
  double logistic_steepness = 10.0;  // k
  double logistic_midpoint = 0.5;    // d0, on block-normalized distance

  int sample_points() const { return sample_grid * sample_grid; }
  int dimension() const { return filter_count * sample_points(); }
  std::vector<Eigen::Vector2i> offsets() const;
  void validate() const;
};

struct DirdDescriptor {
  std::vector<double> raw;         // concatenated L2-normalized blocks
  std::vector<uint16_t> quantized; // byte mode in [1,256], bit mode in {0,1}
  Quantization mode = Quantization::byte;
};

// One zero-sum Haar kernel: axis-aligned half-open rectangles with +-1
// weights, evaluated around a pixel via the integral image.
struct HaarKernel {
  struct Rect {
    int x0, y0, x1, y1;  // half-open, relative to the evaluation pixel
    int weight;          // +1 or -1
  };
  std::vector<Rect> rects;
  int support = 0;        // px
  bool x_contrast = false;  // responds to horizontal gradients

  int reach() const;  // max |corner coordinate|
};

// Fixed table: 6 shapes x 3 scales x 3 placements = 54 kernels under the
// default config. Deterministic order (scale, placement, shape).
std::vector<HaarKernel> build_filter_bank(const DirdConfig& cfg);

// Exclusive summed-area table over a floating-point image.
class IntegralImage {
 public:
  explicit IntegralImage(const ImageF& img);

  // Sum over the half-open rectangle [x0,x1) x [y0,y1).
  double rect_sum(int x0, int y0, int x1, int y1) const {
    const size_t w = size_t(width_) + 1;
    return sums_[size_t(y1) * w + x1] - sums_[size_t(y0) * w + x1] -
           sums_[size_t(y1) * w + x0] + sums_[size_t(y0) * w + x0];
  }

  int width() const { return width_; }
  int height() const { return height_; }

 private:
  int width_, height_;
  std::vector<double> sums_;
};

// Signed responses of the whole bank at one pixel. Builds an integral image
// per call; extraction of full descriptors shares one internally.
std::vector<double> filter_bank_response(const GrayImage& img,
                                         Eigen::Vector2i pixel,
                                         const DirdConfig& cfg);

// Full descriptor: per sample point, L2-normalize the filter responses at
// each aggregation offset, sum them, L2-normalize the sum, concatenate in
// row-major sample order, then quantize. Inputs that are not already at the
// 256x256 working size are resampled bilinearly first.
DirdDescriptor compute_descriptor(const GrayImage& img, const DirdConfig& cfg);

// Byte mode: clamp(round((v+1)/2*255), 0, 255) + 1 in [1,256].
// Bit mode: v > 0.
std::vector<uint16_t> quantize(std::span<const double> raw, Quantization mode);

// Inverse of the byte/bit mapping, up to quantization error.
std::vector<double> dequantize(std::span<const uint16_t> quantized,
                               Quantization mode);

// Euclidean distance; uses raw vectors when both are present, dequantized
// values otherwise. Throws on dimension or mode mismatch.
double descriptor_distance(const DirdDescriptor& a, const DirdDescriptor& b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Distance scaled to per-sample-block RMS so the logistic midpoint is
// independent of descriptor geometry.
double normalized_distance(double distance, const DirdConfig& cfg);

// Logistic similarity in (0,1), strictly decreasing in the distance.
double similarity(double distance_normalized, const DirdConfig& cfg);

}  // namespace lcdet
