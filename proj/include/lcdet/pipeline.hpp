#pragma once

#include <filesystem>
#include <set>

#include "lcdet/config.hpp"
#include "lcdet/dataset.hpp"
#include "lcdet/descriptor_cache.hpp"
#include "lcdet/eval.hpp"

namespace lcdet {

struct PipelineResult {
  bool baseline = false;
  std::vector<FilterState> states;  // empty when the dataset has no controls
  std::vector<PlaceRecord> records;
  std::vector<LoopPair> preliminary;
  std::vector<double> preliminary_thresholds;  // parallel to preliminary
  std::vector<CandidateArea> areas;
  DetectOutput detect;
  double filter_ms = 0.0;
  double gate_ms = 0.0;
  double extract_ms = 0.0;
  uint32_t extracted_frames = 0;
};

// Place records from the odometry filter when controls are available,
// otherwise from ground truth with zero covariance.
std::vector<PlaceRecord> build_records(const DatasetManifest& manifest,
                                       const PipelineConfig& cfg,
                                       std::vector<FilterState>* states = nullptr);

// Frames referenced by any area range; descriptor extraction is limited to
// these.
std::set<uint32_t> frames_needed(const std::vector<CandidateArea>& areas,
                                 uint32_t frame_count);

// Extracts descriptors for the requested frames, skipping cached ones.
void extract_descriptors(const FrameSource& frames,
                         const std::set<uint32_t>& wanted,
                         const DirdConfig& cfg, DescriptorCache& cache,
                         int threads = 1);

// "0-99,200-250" (inclusive, comma separated); empty selects every frame.
std::set<uint32_t> parse_frame_ranges(const std::string& ranges,
                                      uint32_t frame_count);

// Full detection pass. `baseline` replaces the pose-gated areas with the
// whole search triangle. A caller-owned cache can be shared across runs.
PipelineResult run_detect(const DatasetManifest& manifest,
                          const FrameSource& frames,
                          const PipelineConfig& cfg, bool baseline,
                          DescriptorCache* shared_cache = nullptr);

// Writes trajectory.txt, prelim.csv, areas.csv, similarity.csv, loops.csv,
// timing.csv and descriptors.cache into `dir`.
void write_detect_outputs(const PipelineResult& result,
                          const DescriptorCache& cache,
                          const std::filesystem::path& dir);

std::vector<CandidateArea> load_areas_csv(const std::filesystem::path& path);
std::vector<LoopPair> load_loops_csv(const std::filesystem::path& path);

struct EvalResult {
  std::vector<PRPoint> pr;
  double max_recall_at_full_precision = 0.0;
  double comparison_reduction_ratio = 0.0;
  uint64_t constrained_comparisons = 0;
  uint64_t baseline_comparisons = 0;
  size_t truth_pairs = 0;
  double truth_radius_m = 0.0;
};

// Scores a detect run: PR sweep over similarity thresholds plus headline
// metrics. Reads areas, comparison counts and the descriptor cache from
// `detect_dir`; writes pr.csv and summary.json (plus plot_data.json when
// requested) into `out_dir`.
EvalResult run_eval(const DatasetManifest& manifest, const FrameSource& frames,
                    const PipelineConfig& cfg,
                    const std::filesystem::path& detect_dir,
                    const std::filesystem::path& out_dir, bool plot_data);

// Constrained and baseline passes with per-stage wall times and comparison
// counts; writes timing.csv, loops_constrained.csv and loops_baseline.csv.
TimingReport run_bench(const DatasetManifest& manifest,
                       const FrameSource& frames, const PipelineConfig& cfg,
                       const std::filesystem::path& out_dir);

// Extraction command: fills (or extends) the cache file for the requested
// ranges. Idempotent; guarded by an advisory file lock.
void run_extract(const DatasetManifest& manifest, const FrameSource& frames,
                 const PipelineConfig& cfg,
                 const std::filesystem::path& cache_path,
                 const std::string& ranges);

}  // namespace lcdet
