#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "lcdet/geometry.hpp"
#include "lcdet/retrieval.hpp"
#include "lcdet/selector.hpp"

namespace lcdet {

struct GroundTruthLoops {
  std::set<std::pair<uint32_t, uint32_t>> pairs;
  double radius = 0.0;  // m
  int margin = 30;
};

// (i, j) is a true loop when j is the nearest predecessor at least `margin`
// frames back and closer than `radius`. At most one pair per query.
GroundTruthLoops ground_truth_loops(const std::vector<Vec3>& positions,
                                    double radius, int margin = 30);

struct MatchCounts {
  int tp = 0, fp = 0, fn = 0;
};

// Greedy matching: a detection is a true positive when an unconsumed truth
// pair lies within `tolerance` frames on both indices (nearest first).
MatchCounts match_with_truth(const std::vector<LoopPair>& detected,
                             const GroundTruthLoops& truth, int tolerance);

struct PRPoint {
  double threshold = 0.0;
  double precision = 1.0;  // 1 by convention when nothing is detected
  double recall = 0.0;
  int tp = 0, fp = 0, fn = 0;
};

// Everything detect_loops needs, bundled so sweeps can rerun it per
// threshold against a shared descriptor cache.
struct SweepInputs {
  const std::vector<CandidateArea>* areas = nullptr;
  const DescriptorCache* cache = nullptr;
  DirdConfig dird;
  RetrievalConfig retrieval;
  int margin = 30;
  uint32_t frame_count = 0;
  int threads = 1;
};

// Runs detect_loops once per similarity threshold (ascending) and scores
// each run against the ground truth.
std::vector<PRPoint> pr_sweep(const SweepInputs& inputs,
                              const std::vector<double>& thresholds,
                              const GroundTruthLoops& truth, int tolerance);

struct StageTiming {
  std::string stage;
  uint32_t frames = 0;
  double total_ms = 0.0;
  uint64_t comparisons = 0;

  double per_frame_ms() const { return frames ? total_ms / frames : 0.0; }
};

struct TimingReport {
  std::vector<StageTiming> constrained;
  std::vector<StageTiming> baseline;
  uint64_t constrained_comparisons = 0;
  uint64_t baseline_comparisons = 0;

  double constrained_total_ms() const;
  double baseline_total_ms() const;
  double reduction_ratio() const {
    return constrained_comparisons
               ? double(baseline_comparisons) / double(constrained_comparisons)
               : 0.0;
  }
};

}  // namespace lcdet
