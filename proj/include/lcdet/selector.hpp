#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lcdet/geometry.hpp"

namespace lcdet {

// Pose and uncertainty of one frame, the unit the loop gate works on.
struct PlaceRecord {
  uint32_t frame_index = 0;
  Vec3 position = Vec3::Zero();
  Quat rotation = Quat::Identity();
  Mat3 position_covariance = Mat3::Zero();
  Mat3 rotation_covariance = Mat3::Zero();  // carried, unused by the gate
  std::optional<uint32_t> descriptor_ref;
};

// A (query, match) frame pair. `score` is the gate distance for preliminary
// pairs and the sequence-mean similarity for final detections.
struct LoopPair {
  uint32_t query = 0;
  uint32_t match = 0;
  double score = 0.0;
};

// Inclusive rectangle in (query, match) index space where image retrieval
// is permitted.
struct CandidateArea {
  uint32_t query_lo = 0, query_hi = 0;
  uint32_t match_lo = 0, match_hi = 0;

  bool contains(uint32_t i, uint32_t j) const {
    return i >= query_lo && i <= query_hi && j >= match_lo && j <= match_hi;
  }
  uint64_t cell_count() const {
    return uint64_t(query_hi - query_lo + 1) * (match_hi - match_lo + 1);
  }
};

struct GateConfig {
  double beta = 1.0;             // allowed drift, m
  int margin = 30;               // frames excluded before the query
  bool use_trace_radius = false; // sqrt(trace/3) instead of sqrt(lambda_max)
  int gap_tolerance = 5;         // cluster continuity, frames
  int enlargement = 10;          // rectangle padding, frames
  int max_cluster_span = 50;     // query-axis chunking of long clusters
};

// Covariance-corrected distance sqrt(dp' (I + Pi + Pj)^-1 dp). Equals the
// Euclidean distance when both covariances are zero and shrinks as they grow.
double pose_distance(const PlaceRecord& a, const PlaceRecord& b);

// 95% confidence radius 1.96 * sqrt(lambda_max(P)) + beta (or the trace
// variant when configured).
double gate_threshold(const PlaceRecord& rec, double beta,
                      bool use_trace_radius = false);

// For each query at least `margin` frames in, the nearest earlier record
// under pose_distance, kept when that minimum beats the dynamic threshold.
// Ties break toward the smaller match index.
std::vector<LoopPair> find_preliminary_loops(
    const std::vector<PlaceRecord>& records, const GateConfig& cfg);

// Clusters pairs by continuity (query AND match within gap_tolerance of a
// member), splits long clusters along the query axis, pads each chunk by
// `enlargement`, clamps to valid indices, and merges rectangles that still
// overlap. Every input pair lands in exactly one output area.
std::vector<CandidateArea> cluster_candidate_areas(
    const std::vector<LoopPair>& pairs, const GateConfig& cfg,
    uint32_t frame_count);

// Skinny areas covering exactly the full search triangle {j <= i - margin};
// running retrieval over them is the unconstrained baseline.
std::vector<CandidateArea> triangle_cover(uint32_t frame_count, int margin);

// Number of (i, j) cells with j <= i - margin.
uint64_t triangle_cell_count(uint32_t frame_count, int margin);

}  // namespace lcdet
