#include "lcdet/selector.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "lcdet/error.hpp"

namespace lcdet {

namespace {

// Disjoint-set over pair indices for the continuity clustering.
class UnionFind {
 public:
  explicit UnionFind(size_t n) : parent_(n) {
    for (size_t i = 0; i < n; ++i) parent_[i] = i;
  }
  size_t find(size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void merge(size_t a, size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<size_t> parent_;
};

struct Rect {
  long query_lo, query_hi, match_lo, match_hi;

  bool overlaps(const Rect& o) const {
    return query_lo <= o.query_hi && o.query_lo <= query_hi &&
           match_lo <= o.match_hi && o.match_lo <= match_hi;
  }
  void absorb(const Rect& o) {
    query_lo = std::min(query_lo, o.query_lo);
    query_hi = std::max(query_hi, o.query_hi);
    match_lo = std::min(match_lo, o.match_lo);
    match_hi = std::max(match_hi, o.match_hi);
  }
};

}  // namespace

double pose_distance(const PlaceRecord& a, const PlaceRecord& b) {
  if (!a.position_covariance.allFinite() || !b.position_covariance.allFinite()) {
    fail(ErrorCode::numeric, "pose_distance: non-finite covariance entries");
  }
  const Mat3 corrected =
      Mat3::Identity() + a.position_covariance + b.position_covariance;
  const Vec3 dp = a.position - b.position;
  const double sq = dp.dot(corrected.llt().solve(dp));
  return std::sqrt(std::max(sq, 0.0));
}

double gate_threshold(const PlaceRecord& rec, double beta,
                      bool use_trace_radius) {
  if (beta < 0.0) fail(ErrorCode::invalid_argument, "beta must be >= 0");
  double radius_sq;
  if (use_trace_radius) {
    radius_sq = rec.position_covariance.trace() / 3.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Mat3> es(rec.position_covariance,
                                           Eigen::EigenvaluesOnly);
    radius_sq = es.eigenvalues().maxCoeff();
  }
  return 1.96 * std::sqrt(std::max(radius_sq, 0.0)) + beta;
}

std::vector<LoopPair> find_preliminary_loops(
    const std::vector<PlaceRecord>& records, const GateConfig& cfg) {
  std::vector<LoopPair> out;
  const int n = int(records.size());
  for (int i = cfg.margin; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (int j = 0; j <= i - cfg.margin; ++j) {
      const double d = pose_distance(records[i], records[j]);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (best_j < 0) continue;
    const double threshold =
        gate_threshold(records[i], cfg.beta, cfg.use_trace_radius);
    if (best < threshold) {
      out.push_back({records[i].frame_index, records[best_j].frame_index, best});
    }
  }
  return out;
}

std::vector<CandidateArea> cluster_candidate_areas(
    const std::vector<LoopPair>& pairs, const GateConfig& cfg,
    uint32_t frame_count) {
  std::vector<CandidateArea> out;
  if (pairs.empty() || frame_count == 0) return out;

  // Continuity clustering: both indices within gap_tolerance of a member.
  UnionFind uf(pairs.size());
  for (size_t a = 0; a < pairs.size(); ++a) {
    for (size_t b = a + 1; b < pairs.size(); ++b) {
      const long dq = long(pairs[b].query) - long(pairs[a].query);
      if (dq > cfg.gap_tolerance) break;  // pairs sorted by query
      const long dm =
          std::labs(long(pairs[b].match) - long(pairs[a].match));
      if (std::labs(dq) <= cfg.gap_tolerance && dm <= cfg.gap_tolerance) {
        uf.merge(a, b);
      }
    }
  }
  std::vector<std::vector<size_t>> clusters;
  {
    std::vector<long> cluster_of(pairs.size(), -1);
    for (size_t i = 0; i < pairs.size(); ++i) {
      const size_t root = uf.find(i);
      if (cluster_of[root] < 0) {
        cluster_of[root] = long(clusters.size());
        clusters.emplace_back();
      }
      clusters[size_t(cluster_of[root])].push_back(i);
    }
  }

  // Long diagonal clusters would produce rectangles quadratic in their
  // length, so each cluster is cut into query-axis chunks. Interior chunk
  // boundaries abut without padding; the cluster's outer ends are padded.
  std::vector<Rect> rects;
  const long span = std::max(cfg.max_cluster_span, 1);
  for (auto& members : clusters) {
    std::sort(members.begin(), members.end(), [&](size_t a, size_t b) {
      return pairs[a].query < pairs[b].query;
    });
    const long cluster_lo = long(pairs[members.front()].query);
    const long cluster_hi = long(pairs[members.back()].query);
    size_t begin = 0;
    while (begin < members.size()) {
      const long chunk_lo = long(pairs[members[begin]].query);
      size_t end = begin;
      Rect r{chunk_lo, chunk_lo, long(pairs[members[begin]].match),
             long(pairs[members[begin]].match)};
      while (end < members.size() &&
             long(pairs[members[end]].query) < chunk_lo + span) {
        const auto& p = pairs[members[end]];
        r.query_hi = std::max(r.query_hi, long(p.query));
        r.match_lo = std::min(r.match_lo, long(p.match));
        r.match_hi = std::max(r.match_hi, long(p.match));
        ++end;
      }
      r.match_lo -= cfg.enlargement;
      r.match_hi += cfg.enlargement;
      if (r.query_lo == cluster_lo) r.query_lo -= cfg.enlargement;
      if (r.query_hi == cluster_hi) r.query_hi += cfg.enlargement;
      rects.push_back(r);
      begin = end;
    }
  }

  // Clamp to valid indices and keep the match range below the margin line.
  const long last = long(frame_count) - 1;
  for (auto& r : rects) {
    r.query_lo = std::clamp(r.query_lo, 0L, last);
    r.query_hi = std::clamp(r.query_hi, 0L, last);
    r.match_lo = std::clamp(r.match_lo, 0L, last);
    r.match_hi = std::min({r.match_hi, r.query_hi - cfg.margin, last});
  }
  rects.erase(std::remove_if(rects.begin(), rects.end(),
                             [](const Rect& r) {
                               return r.query_lo > r.query_hi ||
                                      r.match_lo > r.match_hi;
                             }),
              rects.end());

  // Merge rectangles that still overlap (different clusters drifting into
  // the same region) until disjoint.
  bool merged = true;
  while (merged) {
    merged = false;
    for (size_t a = 0; a < rects.size() && !merged; ++a) {
      for (size_t b = a + 1; b < rects.size() && !merged; ++b) {
        if (rects[a].overlaps(rects[b])) {
          rects[a].absorb(rects[b]);
          rects.erase(rects.begin() + long(b));
          merged = true;
        }
      }
    }
  }

  std::sort(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) {
    return std::tie(a.query_lo, a.match_lo) < std::tie(b.query_lo, b.match_lo);
  });
  out.reserve(rects.size());
  for (const auto& r : rects) {
    out.push_back({uint32_t(r.query_lo), uint32_t(r.query_hi),
                   uint32_t(r.match_lo), uint32_t(r.match_hi)});
  }
  return out;
}

std::vector<CandidateArea> triangle_cover(uint32_t frame_count, int margin) {
  std::vector<CandidateArea> out;
  for (long i = margin; i < long(frame_count); ++i) {
    out.push_back({uint32_t(i), uint32_t(i), 0, uint32_t(i - margin)});
  }
  return out;
}

uint64_t triangle_cell_count(uint32_t frame_count, int margin) {
  if (long(frame_count) <= margin) return 0;
  const uint64_t rows = frame_count - uint32_t(margin);
  return rows * (rows + 1) / 2;
}

}  // namespace lcdet
