#include "lcdet/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lcdet/error.hpp"
#include "lcdet/rng.hpp"

namespace lcdet {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, path.string() + ": cannot open for writing");
  return out;
}

// Initial filter state: ground-truth origin pose with zero covariance. The
// initial velocity comes from the generating config when the dataset is
// synthetic, otherwise from the first position difference.
FilterState initial_state(const DatasetManifest& m) {
  FilterState s;
  s.position = m.ground_truth.front().position;
  s.rotation = m.ground_truth.front().rotation;
  if (m.synth_config) {
    s.velocity = generate_trajectory(*m.synth_config, nullptr)
                     .front()
                     .velocity;
  } else if (m.ground_truth.size() > 1 && m.controls &&
             m.controls->controls.size() > 1 &&
             m.controls->controls[1].dt > 0.0) {
    s.velocity = (m.ground_truth[1].position - m.ground_truth[0].position) /
                 m.controls->controls[1].dt;
  }
  return s;
}

}  // namespace

std::vector<PlaceRecord> build_records(const DatasetManifest& manifest,
                                       const PipelineConfig& cfg,
                                       std::vector<FilterState>* states) {
  std::vector<PlaceRecord> records;
  records.reserve(manifest.frame_count);
  if (manifest.controls) {
    const auto estimates =
        run_filter(manifest.controls->controls, manifest.controls->observations,
                   cfg.noise_config(), initial_state(manifest));
    for (uint32_t k = 0; k < estimates.size(); ++k) {
      const auto& e = estimates[k];
      records.push_back({k, e.position, e.rotation, e.position_covariance(),
                         e.rotation_covariance(), k});
    }
    if (states) *states = estimates;
  } else {
    for (const auto& row : manifest.ground_truth) {
      records.push_back({row.frame, row.position, row.rotation,
                         row.position_covariance, Mat3::Zero(), row.frame});
    }
    if (states) states->clear();
  }
  return records;
}

std::set<uint32_t> frames_needed(const std::vector<CandidateArea>& areas,
                                 uint32_t frame_count) {
  std::set<uint32_t> out;
  for (const auto& a : areas) {
    for (uint32_t i = a.query_lo; i <= a.query_hi && i < frame_count; ++i) {
      out.insert(i);
    }
    for (uint32_t j = a.match_lo; j <= a.match_hi && j < frame_count; ++j) {
      out.insert(j);
    }
  }
  return out;
}

void extract_descriptors(const FrameSource& frames,
                         const std::set<uint32_t>& wanted,
                         const DirdConfig& cfg, DescriptorCache& cache,
                         int threads) {
  std::vector<uint32_t> missing;
  for (uint32_t f : wanted) {
    if (!cache.contains(f)) missing.push_back(f);
  }
  if (missing.empty()) return;

  std::vector<std::vector<uint16_t>> results(missing.size());
  const int workers =
      std::max(1, std::min<int>(threads, int(missing.size())));
  auto work = [&](int w) {
    for (size_t k = size_t(w); k < missing.size(); k += size_t(workers)) {
      results[k] =
          std::move(compute_descriptor(frames.frame(missing[k]), cfg).quantized);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (size_t k = 0; k < missing.size(); ++k) {
    cache.insert(missing[k], std::move(results[k]));
  }
}

std::set<uint32_t> parse_frame_ranges(const std::string& ranges,
                                      uint32_t frame_count) {
  std::set<uint32_t> out;
  if (ranges.empty()) {
    for (uint32_t f = 0; f < frame_count; ++f) out.insert(f);
    return out;
  }
  std::istringstream in(ranges);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    long lo = 0, hi = 0;
    const auto dash = token.find('-');
    try {
      if (dash == std::string::npos) {
        lo = hi = std::stol(token);
      } else {
        lo = std::stol(token.substr(0, dash));
        hi = std::stol(token.substr(dash + 1));
      }
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument, "bad frame range '" + token + "'");
    }
    if (lo < 0 || hi < lo || hi >= long(frame_count)) {
      fail(ErrorCode::invalid_argument,
           "frame range '" + token + "' outside 0.." +
               std::to_string(frame_count - 1));
    }
    for (long f = lo; f <= hi; ++f) out.insert(uint32_t(f));
  }
  return out;
}

PipelineResult run_detect(const DatasetManifest& manifest,
                          const FrameSource& frames, const PipelineConfig& cfg,
                          bool baseline, DescriptorCache* shared_cache) {
  cfg.validate();
  if (manifest.frame_count == 0) {
    fail(ErrorCode::invalid_argument, "dataset has no frames");
  }

  PipelineResult result;
  result.baseline = baseline;

  auto t0 = Clock::now();
  result.records = build_records(manifest, cfg, &result.states);
  result.filter_ms = ms_since(t0);

  t0 = Clock::now();
  if (baseline) {
    result.areas = triangle_cover(manifest.frame_count, cfg.margin);
  } else {
    GateConfig gate = cfg.gate;
    gate.margin = cfg.margin;
    result.preliminary = find_preliminary_loops(result.records, gate);
    for (const auto& p : result.preliminary) {
      result.preliminary_thresholds.push_back(gate_threshold(
          result.records[p.query], gate.beta, gate.use_trace_radius));
    }
    result.areas =
        cluster_candidate_areas(result.preliminary, gate, manifest.frame_count);
  }
  result.gate_ms = ms_since(t0);

  DescriptorCache local_cache(uint32_t(cfg.dird.dimension()),
                              cfg.dird.quantization);
  DescriptorCache& cache = shared_cache ? *shared_cache : local_cache;
  if (cache.dimension() != uint32_t(cfg.dird.dimension()) ||
      cache.mode() != cfg.dird.quantization) {
    fail(ErrorCode::invalid_argument,
         "descriptor cache geometry does not match the configuration");
  }

  t0 = Clock::now();
  const auto wanted = frames_needed(result.areas, manifest.frame_count);
  const size_t before = cache.size();
  extract_descriptors(frames, wanted, cfg.dird, cache, cfg.threads);
  result.extracted_frames = uint32_t(cache.size() - before);
  result.extract_ms = ms_since(t0);

  result.detect = detect_loops(result.areas, cache, cfg.dird, cfg.retrieval,
                               cfg.margin, manifest.frame_count, cfg.threads);
  return result;
}

void write_detect_outputs(const PipelineResult& result,
                          const DescriptorCache& cache, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, dir.string() + ": " + ec.message());

  {
    std::vector<TrajectoryRow> rows;
    rows.reserve(result.records.size());
    for (const auto& r : result.records) {
      rows.push_back({r.frame_index, double(r.frame_index), r.position,
                      r.rotation, r.position_covariance});
    }
    save_trajectory(rows, dir / "trajectory.txt");
  }

  {
    auto out = open_out(dir / "prelim.csv");
    out << "i,j,distance,threshold\n";
    for (size_t k = 0; k < result.preliminary.size(); ++k) {
      const auto& p = result.preliminary[k];
      out << p.query << "," << p.match << "," << fmt_g(p.score) << ","
          << fmt_g(result.preliminary_thresholds[k]) << "\n";
    }
  }

  {
    auto out = open_out(dir / "areas.csv");
    out << "i_lo,i_hi,j_lo,j_hi\n";
    for (const auto& a : result.areas) {
      out << a.query_lo << "," << a.query_hi << "," << a.match_lo << ","
          << a.match_hi << "\n";
    }
  }

  {
    auto out = open_out(dir / "similarity.csv");
    out << "i,j,similarity\n";
    for (const auto& [key, value] : result.detect.similarity.entries()) {
      out << key.first << "," << key.second << "," << fmt_g(value) << "\n";
    }
  }

  {
    auto out = open_out(dir / "loops.csv");
    out << "i,j,score\n";
    for (const auto& p : result.detect.loops) {
      out << p.query << "," << p.match << "," << fmt_g(p.score) << "\n";
    }
  }

  {
    const uint32_t n = uint32_t(result.records.size());
    auto out = open_out(dir / "timing.csv");
    out << "stage,frames,total_ms,per_frame_ms,comparisons\n";
    auto row = [&](const char* stage, uint32_t frames, double total,
                   uint64_t comparisons) {
      out << stage << "," << frames << "," << fmt_g(total) << ","
          << fmt_g(frames ? total / frames : 0.0) << "," << comparisons
          << "\n";
    };
    row("filter", n, result.filter_ms, 0);
    row("gate", n, result.gate_ms, 0);
    row("extract", result.extracted_frames, result.extract_ms, 0);
    row("similarity", n, result.detect.similarity_ms,
        result.detect.comparisons);
    row("postprocess", n, result.detect.postprocess_ms, 0);
  }

  // `eval` reuses this cache for its threshold sweep.
  cache.save(dir / "descriptors.cache");
}

std::vector<CandidateArea> load_areas_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, path.string() + ": cannot open");
  std::vector<CandidateArea> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CandidateArea a;
    if (std::sscanf(line.c_str(), "%u,%u,%u,%u", &a.query_lo, &a.query_hi,
                    &a.match_lo, &a.match_hi) != 4) {
      fail(ErrorCode::io, path.string() + ": malformed area row '" + line + "'");
    }
    out.push_back(a);
  }
  return out;
}

std::vector<LoopPair> load_loops_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, path.string() + ": cannot open");
  std::vector<LoopPair> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LoopPair p;
    if (std::sscanf(line.c_str(), "%u,%u,%lf", &p.query, &p.match, &p.score) !=
        3) {
      fail(ErrorCode::io, path.string() + ": malformed loop row '" + line + "'");
    }
    out.push_back(p);
  }
  return out;
}

namespace {

uint64_t read_similarity_comparisons(const fs::path& timing_csv) {
  std::ifstream in(timing_csv);
  if (!in) fail(ErrorCode::io, timing_csv.string() + ": cannot open");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("similarity,", 0) == 0) {
      const auto last = line.rfind(',');
      return std::stoull(line.substr(last + 1));
    }
  }
  fail(ErrorCode::io,
       timing_csv.string() + ": no similarity stage in timing data");
}

double resolve_truth_radius(const DatasetManifest& manifest,
                            const PipelineConfig& cfg) {
  if (cfg.eval.truth_radius_m > 0.0) return cfg.eval.truth_radius_m;
  if (manifest.truth_radius_m > 0.0) return manifest.truth_radius_m;
  // 3 x median inter-frame displacement.
  std::vector<double> steps;
  for (size_t i = 1; i < manifest.ground_truth.size(); ++i) {
    steps.push_back((manifest.ground_truth[i].position -
                     manifest.ground_truth[i - 1].position)
                        .norm());
  }
  if (steps.empty()) return 0.0;
  std::nth_element(steps.begin(), steps.begin() + long(steps.size() / 2),
                   steps.end());
  return 3.0 * steps[steps.size() / 2];
}

}  // namespace

EvalResult run_eval(const DatasetManifest& manifest, const FrameSource& frames,
                    const PipelineConfig& cfg, const fs::path& detect_dir,
                    const fs::path& out_dir, bool plot_data) {
  cfg.validate();
  const auto areas = load_areas_csv(detect_dir / "areas.csv");
  for (const auto& a : areas) {
    if (a.query_hi >= manifest.frame_count || a.match_hi >= manifest.frame_count) {
      std::ostringstream os;
      os << "mismatched frame counts: area reaches frame "
         << std::max(a.query_hi, a.match_hi) << " but the dataset has "
         << manifest.frame_count << " frames";
      fail(ErrorCode::invalid_argument, os.str());
    }
  }

  DescriptorCache cache(uint32_t(cfg.dird.dimension()), cfg.dird.quantization);
  const fs::path cache_path = detect_dir / "descriptors.cache";
  if (fs::exists(cache_path)) {
    cache = DescriptorCache::load(cache_path);
    if (cache.dimension() != uint32_t(cfg.dird.dimension()) ||
        cache.mode() != cfg.dird.quantization) {
      fail(ErrorCode::invalid_argument,
           cache_path.string() + ": cache geometry does not match the config");
    }
  }
  extract_descriptors(frames, frames_needed(areas, manifest.frame_count),
                      cfg.dird, cache, cfg.threads);

  EvalResult result;
  result.truth_radius_m = resolve_truth_radius(manifest, cfg);
  std::vector<Vec3> positions;
  positions.reserve(manifest.ground_truth.size());
  for (const auto& row : manifest.ground_truth) positions.push_back(row.position);
  const auto truth =
      ground_truth_loops(positions, result.truth_radius_m, cfg.margin);
  result.truth_pairs = truth.pairs.size();

  SweepInputs inputs;
  inputs.areas = &areas;
  inputs.cache = &cache;
  inputs.dird = cfg.dird;
  inputs.retrieval = cfg.retrieval;
  inputs.margin = cfg.margin;
  inputs.frame_count = manifest.frame_count;
  inputs.threads = cfg.threads;
  result.pr =
      pr_sweep(inputs, cfg.sweep_thresholds(), truth, cfg.eval.match_tolerance);

  for (const auto& p : result.pr) {
    if (p.precision >= 1.0) {
      result.max_recall_at_full_precision =
          std::max(result.max_recall_at_full_precision, p.recall);
    }
  }
  result.constrained_comparisons =
      read_similarity_comparisons(detect_dir / "timing.csv");
  result.baseline_comparisons =
      triangle_cell_count(manifest.frame_count, cfg.margin);
  result.comparison_reduction_ratio =
      result.constrained_comparisons
          ? double(result.baseline_comparisons) /
                double(result.constrained_comparisons)
          : 0.0;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::io, out_dir.string() + ": " + ec.message());
  {
    auto out = open_out(out_dir / "pr.csv");
    out << "threshold,precision,recall,tp,fp,fn\n";
    for (const auto& p : result.pr) {
      out << fmt_g(p.threshold) << "," << fmt_g(p.precision) << ","
          << fmt_g(p.recall) << "," << p.tp << "," << p.fp << "," << p.fn
          << "\n";
    }
  }
  nlohmann::json summary{
      {"frame_count", manifest.frame_count},
      {"truth_pairs", result.truth_pairs},
      {"truth_radius_m", result.truth_radius_m},
      {"max_recall_at_full_precision", result.max_recall_at_full_precision},
      {"constrained_comparisons", result.constrained_comparisons},
      {"baseline_comparisons", result.baseline_comparisons},
      {"comparison_reduction_ratio", result.comparison_reduction_ratio},
  };
  {
    auto out = open_out(out_dir / "summary.json");
    out << summary.dump(2) << "\n";
  }
  if (plot_data) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : result.pr) {
      points.push_back({{"threshold", p.threshold},
                        {"precision", p.precision},
                        {"recall", p.recall},
                        {"tp", p.tp},
                        {"fp", p.fp},
                        {"fn", p.fn}});
    }
    nlohmann::json plot{{"pr", points}, {"summary", summary}};
    auto out = open_out(out_dir / "plot_data.json");
    out << plot.dump(2) << "\n";
  }
  return result;
}

TimingReport run_bench(const DatasetManifest& manifest,
                       const FrameSource& frames, const PipelineConfig& cfg,
                       const fs::path& out_dir) {
  PipelineConfig timed = cfg;
  if (!cfg.bench_parallel) timed.threads = 1;

  TimingReport report;
  auto stages = [&](const PipelineResult& r) {
    const uint32_t n = uint32_t(r.records.size());
    std::vector<StageTiming> out;
    out.push_back({"filter", n, r.filter_ms, 0});
    out.push_back({"gate", n, r.gate_ms, 0});
    out.push_back({"extract", r.extracted_frames, r.extract_ms, 0});
    out.push_back({"similarity", n, r.detect.similarity_ms,
                   r.detect.comparisons});
    out.push_back({"postprocess", n, r.detect.postprocess_ms, 0});
    return out;
  };

  const auto constrained = run_detect(manifest, frames, timed, false);
  const auto baseline = run_detect(manifest, frames, timed, true);
  report.constrained = stages(constrained);
  report.baseline = stages(baseline);
  report.constrained_comparisons = constrained.detect.comparisons;
  report.baseline_comparisons = baseline.detect.comparisons;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::io, out_dir.string() + ": " + ec.message());
  {
    auto out = open_out(out_dir / "timing.csv");
    out << "stage,frames,total_ms,per_frame_ms,comparisons\n";
    auto rows = [&](const char* prefix, const std::vector<StageTiming>& list) {
      for (const auto& s : list) {
        out << prefix << s.stage << "," << s.frames << "," << fmt_g(s.total_ms)
            << "," << fmt_g(s.per_frame_ms()) << "," << s.comparisons << "\n";
      }
    };
    rows("constrained_", report.constrained);
    rows("baseline_", report.baseline);
  }
  auto dump_loops = [&](const char* name, const std::vector<LoopPair>& loops) {
    auto out = open_out(out_dir / name);
    out << "i,j,score\n";
    for (const auto& p : loops) {
      out << p.query << "," << p.match << "," << fmt_g(p.score) << "\n";
    }
  };
  dump_loops("loops_constrained.csv", constrained.detect.loops);
  dump_loops("loops_baseline.csv", baseline.detect.loops);
  return report;
}

void run_extract(const DatasetManifest& manifest, const FrameSource& frames,
                 const PipelineConfig& cfg, const fs::path& cache_path,
                 const std::string& ranges) {
  cfg.validate();
  DescriptorCache cache(uint32_t(cfg.dird.dimension()), cfg.dird.quantization);
  if (fs::exists(cache_path)) {
    cache = DescriptorCache::load(cache_path);
    if (cache.dimension() != uint32_t(cfg.dird.dimension()) ||
        cache.mode() != cfg.dird.quantization) {
      fail(ErrorCode::invalid_argument,
           cache_path.string() + ": cache geometry does not match the config");
    }
  }
  const auto wanted = parse_frame_ranges(ranges, manifest.frame_count);

  // Advisory lock so concurrent extract invocations serialize on the file.
  const fs::path lock_path = cache_path.string() + ".lock";
  const int lock_fd =
      ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
  if (lock_fd >= 0) ::flock(lock_fd, LOCK_EX);
  try {
    extract_descriptors(frames, wanted, cfg.dird, cache, cfg.threads);
    cache.save(cache_path);
  } catch (...) {
    if (lock_fd >= 0) {
      ::flock(lock_fd, LOCK_UN);
      ::close(lock_fd);
    }
    throw;
  }
  if (lock_fd >= 0) {
    ::flock(lock_fd, LOCK_UN);
    ::close(lock_fd);
  }
}

}  // namespace lcdet
