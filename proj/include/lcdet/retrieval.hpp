#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "lcdet/descriptor_cache.hpp"
#include "lcdet/selector.hpp"

namespace lcdet {

struct RetrievalConfig {
  double similarity_threshold = 0.6;
  int sequence_length = 5;             // L, odd
  double sequence_sum_threshold = 3.5; // 0.7 * L under defaults
  int nms_window = 10;                 // Chebyshev suppression radius

  void validate() const;
};

// Sparse (query, match) -> similarity map. Keys are ordered, so iteration,
// export and post-processing are deterministic.
class SimilarityMatrix {
 public:
  using Key = std::pair<uint32_t, uint32_t>;

  explicit SimilarityMatrix(uint32_t frame_count = 0)
      : frame_count_(frame_count) {}

  void set(uint32_t i, uint32_t j, double value) { entries_[{i, j}] = value; }
  std::optional<double> at(uint32_t i, uint32_t j) const {
    auto it = entries_.find({i, j});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  double at_or_zero(uint32_t i, uint32_t j) const {
    auto it = entries_.find({i, j});
    return it == entries_.end() ? 0.0 : it->second;
  }

  const std::map<Key, double>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  uint32_t frame_count() const { return frame_count_; }

 private:
  uint32_t frame_count_;
  std::map<Key, double> entries_;
};

struct SimilarityBuild {
  SimilarityMatrix matrix;
  uint64_t comparisons = 0;  // descriptor distance evaluations performed
};

// Descriptor similarity for every deduplicated cell of the areas that
// respects the margin, stored when it reaches similarity_threshold.
// Missing descriptors for in-area frames are an error naming the frame.
SimilarityBuild build_similarity(const std::vector<CandidateArea>& areas,
                                 const DescriptorCache& cache,
                                 const DirdConfig& dird_cfg,
                                 const RetrievalConfig& cfg, int margin,
                                 uint32_t frame_count, int threads = 1);

// Keeps (i, j) when the diagonal window sum reaches the sequence threshold,
// absent entries counting as zero. Cells at the frame-range boundary use the
// truncated window with a proportionally scaled threshold. Stored values are
// window means, so they stay in [0, 1].
SimilarityMatrix sequence_match(const SimilarityMatrix& m,
                                const RetrievalConfig& cfg);

// Per-query suppression: (i, j) survives when no other entry for the same
// query within `nms_window` of j scores higher; score ties break toward the
// smaller match index. Output is sorted by query index.
std::vector<LoopPair> non_max_suppression(const SimilarityMatrix& m,
                                          const RetrievalConfig& cfg);

struct DetectOutput {
  std::vector<LoopPair> loops;
  SimilarityMatrix similarity;  // raw thresholded similarities
  SimilarityMatrix refined;     // after sequence match
  uint64_t comparisons = 0;
  double similarity_ms = 0.0;
  double postprocess_ms = 0.0;
};

// build_similarity -> sequence_match -> non_max_suppression.
DetectOutput detect_loops(const std::vector<CandidateArea>& areas,
                          const DescriptorCache& cache,
                          const DirdConfig& dird_cfg,
                          const RetrievalConfig& cfg, int margin,
                          uint32_t frame_count, int threads = 1);

}  // namespace lcdet
