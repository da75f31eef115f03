#include "lcdet/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <thread>

#include "lcdet/error.hpp"

namespace lcdet {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

void parallel_for(size_t count, int threads, auto&& body) {
  if (threads <= 1 || count < 2) {
    for (size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const int workers = std::min<int>(threads, int(count));
  std::vector<std::thread> pool;
  pool.reserve(size_t(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (size_t i = size_t(w); i < count; i += size_t(workers)) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

void RetrievalConfig::validate() const {
  if (!(similarity_threshold > 0.0 && similarity_threshold < 1.0)) {
    fail(ErrorCode::config, "retrieval.similarity_threshold must be in (0,1)");
  }
  if (sequence_length < 1 || sequence_length % 2 == 0) {
    fail(ErrorCode::config, "retrieval.sequence_length must be odd and >= 1");
  }
  if (nms_window < 0) fail(ErrorCode::config, "retrieval.nms_window must be >= 0");
}

SimilarityBuild build_similarity(const std::vector<CandidateArea>& areas,
                                 const DescriptorCache& cache,
                                 const DirdConfig& dird_cfg,
                                 const RetrievalConfig& cfg, int margin,
                                 uint32_t frame_count, int threads) {
  cfg.validate();

  // Deduplicate cells across areas and drop anything inside the margin band.
  std::set<SimilarityMatrix::Key> cell_set;
  for (const auto& area : areas) {
    for (uint32_t i = area.query_lo; i <= area.query_hi && i < frame_count;
         ++i) {
      if (long(i) - margin < 0) continue;
      const uint32_t j_max =
          std::min<uint32_t>(area.match_hi, uint32_t(long(i) - margin));
      for (uint32_t j = area.match_lo; j <= j_max; ++j) {
        cell_set.insert({i, j});
      }
    }
  }
  const std::vector<SimilarityMatrix::Key> cells(cell_set.begin(),
                                                 cell_set.end());

  for (const auto& [i, j] : cells) {
    if (!cache.contains(i)) {
      fail(ErrorCode::state,
           "no descriptor for in-area frame " + std::to_string(i));
    }
    if (!cache.contains(j)) {
      fail(ErrorCode::state,
           "no descriptor for in-area frame " + std::to_string(j));
    }
  }

  std::vector<double> sims(cells.size());
  parallel_for(cells.size(), threads, [&](size_t k) {
    const auto& [i, j] = cells[k];
    const double d = euclidean_distance(cache.values(i), cache.values(j));
    sims[k] = similarity(normalized_distance(d, dird_cfg), dird_cfg);
  });

  SimilarityBuild out{SimilarityMatrix(frame_count), cells.size()};
  for (size_t k = 0; k < cells.size(); ++k) {
    if (sims[k] >= cfg.similarity_threshold) {
      out.matrix.set(cells[k].first, cells[k].second, sims[k]);
    }
  }
  return out;
}

SimilarityMatrix sequence_match(const SimilarityMatrix& m,
                                const RetrievalConfig& cfg) {
  cfg.validate();
  const int half = (cfg.sequence_length - 1) / 2;
  const long n = long(m.frame_count());

  SimilarityMatrix out(m.frame_count());
  for (const auto& [key, value] : m.entries()) {
    (void)value;
    const long i = key.first;
    const long j = key.second;
    double sum = 0.0;
    int available = 0;
    for (int t = -half; t <= half; ++t) {
      const long qi = i + t;
      const long qj = j + t;
      if (qi < 0 || qi >= n || qj < 0 || qj >= n) continue;
      ++available;
      sum += m.at_or_zero(uint32_t(qi), uint32_t(qj));
    }
    if (available == 0) continue;
    const double scaled_threshold =
        cfg.sequence_sum_threshold * available / cfg.sequence_length;
    if (sum >= scaled_threshold) {
      out.set(key.first, key.second, sum / available);
    }
  }
  return out;
}

std::vector<LoopPair> non_max_suppression(const SimilarityMatrix& m,
                                          const RetrievalConfig& cfg) {
  cfg.validate();
  const long w = cfg.nms_window;
  const auto& entries = m.entries();

  std::vector<LoopPair> out;
  for (const auto& [key, score] : entries) {
    const long j = key.second;
    bool winner = true;
    // Competitors: entries for the same query within the match window.
    auto it = entries.lower_bound({key.first, 0});
    for (; winner && it != entries.end() && it->first.first == key.first;
         ++it) {
      if (it->first == key) continue;
      const long oj = it->first.second;
      if (std::labs(oj - j) > w) continue;
      const double other = it->second;
      if (other > score || (other == score && oj < j)) winner = false;
    }
    if (winner) out.push_back({key.first, key.second, score});
  }
  return out;  // map order is already (query, match) sorted
}

DetectOutput detect_loops(const std::vector<CandidateArea>& areas,
                          const DescriptorCache& cache,
                          const DirdConfig& dird_cfg,
                          const RetrievalConfig& cfg, int margin,
                          uint32_t frame_count, int threads) {
  DetectOutput out;
  auto t0 = Clock::now();
  auto build =
      build_similarity(areas, cache, dird_cfg, cfg, margin, frame_count,
                       threads);
  out.similarity_ms = ms_since(t0);
  out.comparisons = build.comparisons;
  out.similarity = std::move(build.matrix);

  t0 = Clock::now();
  out.refined = sequence_match(out.similarity, cfg);
  out.loops = non_max_suppression(out.refined, cfg);
  out.postprocess_ms = ms_since(t0);
  return out;
}

}  // namespace lcdet
