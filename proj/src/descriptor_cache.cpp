#include "lcdet/descriptor_cache.hpp"

#include <cstring>
#include <fstream>

#include "lcdet/error.hpp"

namespace lcdet {

namespace {

constexpr char kMagic[5] = {'D', 'I', 'R', 'D', '1'};

template <typename T>
void write_le(std::ofstream& out, T value) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = (unsigned char)((uint64_t(value) >> (8 * i)) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
  unsigned char buf[sizeof(T)] = {};
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t(buf[i]) << (8 * i);
  return T(v);
}

}  // namespace

DescriptorCache DescriptorCache::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, path.string() + ": cannot open");
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kMagic, 5) != 0) {
    fail(ErrorCode::io, path.string() + ": not a descriptor cache file");
  }
  const uint32_t dim = read_le<uint32_t>(in);
  const uint8_t mode_byte = read_le<uint8_t>(in);
  if (mode_byte > 1) fail(ErrorCode::io, path.string() + ": bad mode byte");
  DescriptorCache cache(dim, mode_byte == 1 ? Quantization::byte
                                            : Quantization::bit);
  const uint32_t count = read_le<uint32_t>(in);
  for (uint32_t k = 0; k < count; ++k) {
    const uint32_t frame = read_le<uint32_t>(in);
    std::vector<uint16_t> values(dim);
    for (uint32_t i = 0; i < dim; ++i) values[i] = read_le<uint16_t>(in);
    if (!in) fail(ErrorCode::io, path.string() + ": truncated cache file");
    cache.frames_[frame] = std::move(values);
  }
  return cache;
}

void DescriptorCache::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, path.string() + ": cannot open for writing");
  out.write(kMagic, 5);
  write_le<uint32_t>(out, dimension_);
  write_le<uint8_t>(out, mode_ == Quantization::byte ? 1 : 0);
  write_le<uint32_t>(out, uint32_t(frames_.size()));
  for (const auto& [frame, values] : frames_) {
    write_le<uint32_t>(out, frame);
    for (uint16_t v : values) write_le<uint16_t>(out, v);
  }
  if (!out) fail(ErrorCode::io, path.string() + ": write failed");
}

void DescriptorCache::insert(uint32_t frame, std::vector<uint16_t> quantized) {
  if (quantized.size() != dimension_) {
    fail(ErrorCode::invalid_argument,
         "descriptor for frame " + std::to_string(frame) +
             " has wrong dimension");
  }
  decoded_.erase(frame);
  frames_[frame] = std::move(quantized);
}

const std::vector<uint16_t>& DescriptorCache::quantized(uint32_t frame) const {
  auto it = frames_.find(frame);
  if (it == frames_.end()) {
    fail(ErrorCode::state,
         "no descriptor cached for frame " + std::to_string(frame));
  }
  return it->second;
}

const std::vector<double>& DescriptorCache::values(uint32_t frame) const {
  auto it = decoded_.find(frame);
  if (it == decoded_.end()) {
    it = decoded_.emplace(frame, dequantize(quantized(frame), mode_)).first;
  }
  return it->second;
}

}  // namespace lcdet
