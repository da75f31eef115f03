#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "lcdet/dird.hpp"

namespace lcdet {

// Quantized descriptors keyed by frame index, with a little-endian binary
// file format: magic "DIRD1", u32 dimension, u8 quantization mode,
// u32 frame count, then per frame a u32 index followed by u16 values.
// Saves are sorted by frame index, so repeated extraction of the same
// ranges rewrites the file byte-identically.
class DescriptorCache {
 public:
  DescriptorCache(uint32_t dimension, Quantization mode)
      : dimension_(dimension), mode_(mode) {}

  static DescriptorCache load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool contains(uint32_t frame) const { return frames_.count(frame) != 0; }
  size_t size() const { return frames_.size(); }
  uint32_t dimension() const { return dimension_; }
  Quantization mode() const { return mode_; }

  void insert(uint32_t frame, std::vector<uint16_t> quantized);

  const std::vector<uint16_t>& quantized(uint32_t frame) const;

  // Dequantized values, decoded once per frame.
  const std::vector<double>& values(uint32_t frame) const;

  const std::map<uint32_t, std::vector<uint16_t>>& frames() const {
    return frames_;
  }

 private:
  uint32_t dimension_;
  Quantization mode_;
  std::map<uint32_t, std::vector<uint16_t>> frames_;
  mutable std::map<uint32_t, std::vector<double>> decoded_;
};

}  // namespace lcdet
