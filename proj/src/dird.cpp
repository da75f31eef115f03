#include "lcdet/dird.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lcdet/error.hpp"

namespace lcdet {

namespace {

constexpr int kWorkingSize = 256;
constexpr int kMinImageSize = 64;
constexpr int kScales[] = {8, 16, 32};

// Uniform integer grid of n points over [lo, hi], rounded half up.
std::vector<int> uniform_grid(int lo, int hi, int n) {
  std::vector<int> out(n);
  for (int k = 0; k < n; ++k) {
    const long num = long(k) * (hi - lo);
    const long den = n - 1;
    out[k] = lo + int((2 * num + den) / (2 * den));
  }
  return out;
}

void append_shapes(std::vector<HaarKernel>& bank, int s, int ox, int oy) {
  const int h = s / 2;
  const int q = s / 4;
  auto make = [&](std::initializer_list<HaarKernel::Rect> rects,
                  bool x_contrast) {
    HaarKernel k;
    for (auto r : rects) {
      k.rects.push_back({r.x0 + ox, r.y0 + oy, r.x1 + ox, r.y1 + oy, r.weight});
    }
    k.support = s;
    k.x_contrast = x_contrast;
    bank.push_back(std::move(k));
  };

  // Left/right halves.
  make({{-h, -h, 0, h, +1}, {0, -h, h, h, -1}}, true);
  // Top/bottom halves.
  make({{-h, -h, h, 0, +1}, {-h, 0, h, h, -1}}, false);
  // 2x2 checker.
  make({{-h, -h, 0, 0, +1}, {0, -h, h, 0, -1}, {-h, 0, 0, h, -1},
        {0, 0, h, h, +1}},
       false);
  // Vertical center band against side bands.
  make({{-h, -h, -q, h, -1}, {-q, -h, q, h, +1}, {q, -h, h, h, -1}}, true);
  // Horizontal center band against side bands.
  make({{-h, -h, h, -q, -1}, {-h, -q, h, q, +1}, {-h, q, h, h, -1}}, false);
  // Four corner squares against the center square (equal areas).
  make({{-h, -h, -h + q, -h + q, +1},
        {h - q, -h, h, -h + q, +1},
        {-h, h - q, -h + q, h, +1},
        {h - q, h - q, h, h, +1},
        {-q, -q, q, q, -1}},
       false);
}

struct BankLayout {
  std::vector<HaarKernel> kernels;
  int reach = 0;  // max corner magnitude over the bank
};

BankLayout build_bank_checked(const DirdConfig& cfg) {
  cfg.validate();
  BankLayout out;
  for (int s : kScales) {
    const int shift = s / cfg.segment_grid;
    const int placements[3][2] = {{0, 0}, {shift, shift}, {-shift, -shift}};
    for (auto& p : placements) {
      append_shapes(out.kernels, s, p[0], p[1]);
    }
  }
  if (int(out.kernels.size()) != cfg.filter_count) {
    std::ostringstream os;
    os << "filter_count " << cfg.filter_count
       << " does not match the built filter bank of " << out.kernels.size();
    fail(ErrorCode::config, os.str());
  }
  for (const auto& k : out.kernels) out.reach = std::max(out.reach, k.reach());
  return out;
}

double kernel_response(const IntegralImage& ii, const HaarKernel& k, int px,
                       int py) {
  double acc = 0.0;
  for (const auto& r : k.rects) {
    const double s = ii.rect_sum(px + r.x0, py + r.y0, px + r.x1, py + r.y1);
    acc += r.weight > 0 ? s : -s;
  }
  return acc;
}

// L2-normalize in place; the zero vector stays zero.
void normalize_block(std::span<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq <= 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

}  // namespace

std::vector<Eigen::Vector2i> DirdConfig::offsets() const {
  std::vector<Eigen::Vector2i> out;
  out.reserve(9);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      out.emplace_back(dx * offset_stride, dy * offset_stride);
    }
  }
  return out;
}

void DirdConfig::validate() const {
  if (segment_grid < 2 || kScales[0] % segment_grid != 0) {
    fail(ErrorCode::config,
         "dird.segment_grid must be >= 2 and divide the smallest kernel scale");
  }
  if (sample_grid < 2) fail(ErrorCode::config, "dird.sample_grid must be >= 2");
  if (offset_stride < 0) {
    fail(ErrorCode::config, "dird.offset_stride must be >= 0");
  }
  if (!(logistic_steepness > 0.0)) {
    fail(ErrorCode::config, "dird.logistic_k must be > 0");
  }
  if (!(logistic_midpoint > 0.0)) {
    fail(ErrorCode::config, "dird.logistic_d0 must be > 0");
  }
}

int HaarKernel::reach() const {
  int m = 0;
  for (const auto& r : rects) {
    m = std::max({m, std::abs(r.x0), std::abs(r.x1), std::abs(r.y0),
                  std::abs(r.y1)});
  }
  return m;
}

std::vector<HaarKernel> build_filter_bank(const DirdConfig& cfg) {
  return build_bank_checked(cfg).kernels;
}

IntegralImage::IntegralImage(const ImageF& img)
    : width_(img.width), height_(img.height) {
  const size_t w = size_t(width_) + 1;
  sums_.assign(w * (size_t(height_) + 1), 0.0);
  for (int y = 0; y < height_; ++y) {
    double row = 0.0;
    for (int x = 0; x < width_; ++x) {
      row += img.at(x, y);
      sums_[(size_t(y) + 1) * w + x + 1] = sums_[size_t(y) * w + x + 1] + row;
    }
  }
}

std::vector<double> filter_bank_response(const GrayImage& img,
                                         Eigen::Vector2i pixel,
                                         const DirdConfig& cfg) {
  const BankLayout bank = build_bank_checked(cfg);
  if (pixel.x() - bank.reach < 0 || pixel.y() - bank.reach < 0 ||
      pixel.x() + bank.reach > img.width ||
      pixel.y() + bank.reach > img.height) {
    std::ostringstream os;
    os << "pixel (" << pixel.x() << "," << pixel.y()
       << ") is too close to the border; the filter bank needs a margin of "
       << bank.reach << " px";
    fail(ErrorCode::invalid_argument, os.str());
  }
  const IntegralImage ii(ImageF::from(img));
  std::vector<double> out(bank.kernels.size());
  for (size_t i = 0; i < bank.kernels.size(); ++i) {
    out[i] = kernel_response(ii, bank.kernels[i], pixel.x(), pixel.y());
  }
  return out;
}

DirdDescriptor compute_descriptor(const GrayImage& img, const DirdConfig& cfg) {
  if (img.width < kMinImageSize || img.height < kMinImageSize) {
    std::ostringstream os;
    os << "image " << img.width << "x" << img.height
       << " is smaller than the required " << kMinImageSize << "x"
       << kMinImageSize;
    fail(ErrorCode::invalid_argument, os.str());
  }

  const BankLayout bank = build_bank_checked(cfg);
  const ImageF work = (img.width == kWorkingSize && img.height == kWorkingSize)
                          ? ImageF::from(img)
                          : resample_bilinear(img, kWorkingSize, kWorkingSize);
  const IntegralImage ii(work);

  const int inset = bank.reach + cfg.offset_stride;
  const auto xs = uniform_grid(inset, kWorkingSize - 1 - inset, cfg.sample_grid);
  const auto ys = xs;
  const auto offsets = cfg.offsets();
  const int nf = cfg.filter_count;

  DirdDescriptor out;
  out.mode = cfg.quantization;
  out.raw.reserve(cfg.dimension());
  std::vector<double> aux(nf);
  std::vector<double> block(nf);
  for (int sy : ys) {
    for (int sx : xs) {
      std::fill(block.begin(), block.end(), 0.0);
      for (const auto& off : offsets) {
        const int px = sx + off.x();
        const int py = sy + off.y();
        for (int i = 0; i < nf; ++i) {
          aux[i] = kernel_response(ii, bank.kernels[i], px, py);
        }
        normalize_block(aux);
        for (int i = 0; i < nf; ++i) block[i] += aux[i];
      }
      normalize_block(block);
      out.raw.insert(out.raw.end(), block.begin(), block.end());
    }
  }
  out.quantized = quantize(out.raw, cfg.quantization);
  return out;
}

std::vector<uint16_t> quantize(std::span<const double> raw, Quantization mode) {
  std::vector<uint16_t> out(raw.size());
  if (mode == Quantization::byte) {
    for (size_t i = 0; i < raw.size(); ++i) {
      const long v = std::lround((raw[i] + 1.0) * 0.5 * 255.0);
      out[i] = uint16_t(std::clamp(v, 0L, 255L) + 1);
    }
  } else {
    for (size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] > 0.0 ? 1 : 0;
  }
  return out;
}

std::vector<double> dequantize(std::span<const uint16_t> quantized,
                               Quantization mode) {
  std::vector<double> out(quantized.size());
  if (mode == Quantization::byte) {
    for (size_t i = 0; i < quantized.size(); ++i) {
      out[i] = double(quantized[i] - 1) / 127.5 - 1.0;
    }
  } else {
    for (size_t i = 0; i < quantized.size(); ++i) {
      out[i] = quantized[i] ? 1.0 : -1.0;
    }
  }
  return out;
}

double euclidean_distance(std::span<const double> a,
                          std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::invalid_argument,
         "descriptor dimension mismatch: " + std::to_string(a.size()) +
             " vs " + std::to_string(b.size()));
  }
  const Eigen::Map<const Eigen::VectorXd> va(a.data(), long(a.size()));
  const Eigen::Map<const Eigen::VectorXd> vb(b.data(), long(b.size()));
  return (va - vb).norm();
}

double descriptor_distance(const DirdDescriptor& a, const DirdDescriptor& b) {
  if (a.mode != b.mode) {
    fail(ErrorCode::invalid_argument, "descriptor quantization mode mismatch");
  }
  if (!a.raw.empty() && !b.raw.empty()) {
    return euclidean_distance(a.raw, b.raw);
  }
  return euclidean_distance(dequantize(a.quantized, a.mode),
                            dequantize(b.quantized, b.mode));
}

double normalized_distance(double distance, const DirdConfig& cfg) {
  return distance / std::sqrt(double(cfg.sample_points()));
}

double similarity(double distance_normalized, const DirdConfig& cfg) {
  return 1.0 / (1.0 + std::exp(cfg.logistic_steepness *
                               (distance_normalized - cfg.logistic_midpoint)));
}

}  // namespace lcdet
