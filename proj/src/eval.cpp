#include "lcdet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcdet/error.hpp"

namespace lcdet {

GroundTruthLoops ground_truth_loops(const std::vector<Vec3>& positions,
                                    double radius, int margin) {
  for (const auto& p : positions) {
    if (!p.allFinite()) {
      fail(ErrorCode::invalid_argument,
           "ground_truth_loops: non-finite position");
    }
  }
  GroundTruthLoops out;
  out.radius = radius;
  out.margin = margin;
  const int n = int(positions.size());
  for (int i = margin; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (int j = 0; j <= i - margin; ++j) {
      const double d = (positions[i] - positions[j]).norm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (best_j >= 0 && best < radius) {
      out.pairs.emplace(uint32_t(i), uint32_t(best_j));
    }
  }
  return out;
}

MatchCounts match_with_truth(const std::vector<LoopPair>& detected,
                             const GroundTruthLoops& truth, int tolerance) {
  if (tolerance < 0) {
    fail(ErrorCode::invalid_argument, "match tolerance must be >= 0");
  }
  std::set<std::pair<uint32_t, uint32_t>> remaining = truth.pairs;
  MatchCounts counts;
  for (const auto& det : detected) {
    // Nearest unconsumed truth pair within the tolerance box.
    long best_cost = std::numeric_limits<long>::max();
    auto best = remaining.end();
    for (auto it = remaining.begin(); it != remaining.end(); ++it) {
      const long di = std::labs(long(det.query) - long(it->first));
      const long dj = std::labs(long(det.match) - long(it->second));
      if (di > tolerance || dj > tolerance) continue;
      const long cost = std::max(di, dj);
      if (cost < best_cost) {
        best_cost = cost;
        best = it;
      }
    }
    if (best != remaining.end()) {
      ++counts.tp;
      remaining.erase(best);
    } else {
      ++counts.fp;
    }
  }
  counts.fn = int(remaining.size());
  return counts;
}

std::vector<PRPoint> pr_sweep(const SweepInputs& inputs,
                              const std::vector<double>& thresholds,
                              const GroundTruthLoops& truth, int tolerance) {
  if (!inputs.areas || !inputs.cache) {
    fail(ErrorCode::invalid_argument, "pr_sweep: missing areas or cache");
  }
  std::vector<PRPoint> out;
  out.reserve(thresholds.size());
  for (double th : thresholds) {
    RetrievalConfig cfg = inputs.retrieval;
    cfg.similarity_threshold = th;
    const auto detect =
        detect_loops(*inputs.areas, *inputs.cache, inputs.dird, cfg,
                     inputs.margin, inputs.frame_count, inputs.threads);
    const auto counts = match_with_truth(detect.loops, truth, tolerance);
    PRPoint p;
    p.threshold = th;
    p.tp = counts.tp;
    p.fp = counts.fp;
    p.fn = counts.fn;
    p.precision = (counts.tp + counts.fp) > 0
                      ? double(counts.tp) / (counts.tp + counts.fp)
                      : 1.0;
    p.recall = (counts.tp + counts.fn) > 0
                   ? double(counts.tp) / (counts.tp + counts.fn)
                   : 0.0;
    out.push_back(p);
  }
  return out;
}

double TimingReport::constrained_total_ms() const {
  double t = 0.0;
  for (const auto& s : constrained) t += s.total_ms;
  return t;
}

double TimingReport::baseline_total_ms() const {
  double t = 0.0;
  for (const auto& s : baseline) t += s.total_ms;
  return t;
}

}  // namespace lcdet
