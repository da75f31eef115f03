#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "lcdet/error.hpp"
#include "lcdet/pipeline.hpp"
#include "lcdet/rng.hpp"
#include "lcdet/selector.hpp"
#include "lcdet/synth.hpp"

using namespace lcdet;

namespace {

PlaceRecord record_at(uint32_t frame, const Vec3& p, const Mat3& cov) {
  PlaceRecord r;
  r.frame_index = frame;
  r.position = p;
  r.position_covariance = cov;
  return r;
}

Mat3 random_psd3(Rng& rng, double scale) {
  Mat3 a;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a(r, c) = rng.normal();
  }
  return scale * (a * a.transpose());
}

}  // namespace

TEST_CASE("zero covariance reduces to the Euclidean distance") {
  const auto a = record_at(0, {3.0, 4.0, 0.0}, Mat3::Zero());
  const auto b = record_at(1, {0.0, 0.0, 0.0}, Mat3::Zero());
  CHECK(pose_distance(a, b) == doctest::Approx(5.0).epsilon(1e-12));

  Rng rng(3);
  for (int iter = 0; iter < 1000; ++iter) {
    const Vec3 pa = rng.normal3(10.0);
    const Vec3 pb = rng.normal3(10.0);
    const double d = pose_distance(record_at(0, pa, Mat3::Zero()),
                                   record_at(1, pb, Mat3::Zero()));
    CHECK(d == doctest::Approx((pa - pb).norm()).epsilon(1e-12));
  }
}

TEST_CASE("equal isotropic covariances scale the distance as derived") {
  // dp = (3,4,0), both covariances 4I: corrected matrix 9I -> distance 5/3.
  const auto a = record_at(0, {3.0, 4.0, 0.0}, 4.0 * Mat3::Identity());
  const auto b = record_at(1, {0.0, 0.0, 0.0}, 4.0 * Mat3::Identity());
  CHECK(pose_distance(a, b) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("growing either covariance never increases the distance") {
  Rng rng(5);
  for (int iter = 0; iter < 1000; ++iter) {
    const Vec3 pa = rng.normal3(5.0);
    Vec3 pb = rng.normal3(5.0);
    if ((pa - pb).norm() < 1e-6) pb.x() += 1.0;
    const Mat3 ca = random_psd3(rng, 0.3);
    const Mat3 cb = random_psd3(rng, 0.3);
    const double base =
        pose_distance(record_at(0, pa, ca), record_at(1, pb, cb));
    for (double c : {0.1, 1.0, 10.0}) {
      const double grown = pose_distance(
          record_at(0, pa, ca + c * Mat3::Identity()), record_at(1, pb, cb));
      CHECK(grown < base);
    }
  }
}

TEST_CASE("pose distance is symmetric") {
  Rng rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    const auto a = record_at(0, rng.normal3(8.0), random_psd3(rng, 0.5));
    const auto b = record_at(1, rng.normal3(8.0), random_psd3(rng, 0.5));
    CHECK(pose_distance(a, b) ==
          doctest::Approx(pose_distance(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("non-finite covariance entries are rejected") {
  Mat3 bad = Mat3::Zero();
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pose_distance(record_at(0, Vec3::Zero(), bad),
                                record_at(1, Vec3::Ones(), Mat3::Zero())),
                  Error);
}

TEST_CASE("gate threshold follows the confidence radius") {
  CHECK(gate_threshold(record_at(0, Vec3::Zero(), Mat3::Identity()), 2.0) ==
        doctest::Approx(3.96).epsilon(1e-12));
  CHECK(gate_threshold(record_at(0, Vec3::Zero(), Mat3::Zero()), 0.0) == 0.0);
  Mat3 aniso = Mat3::Zero();
  aniso.diagonal() << 4.0, 1.0, 1.0;
  CHECK(gate_threshold(record_at(0, Vec3::Zero(), aniso), 0.0) ==
        doctest::Approx(3.92).epsilon(1e-12));
  // Trace variant: sqrt(6/3) = sqrt(2).
  CHECK(gate_threshold(record_at(0, Vec3::Zero(), aniso), 0.0, true) ==
        doctest::Approx(1.96 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(gate_threshold(record_at(0, Vec3::Zero(), Mat3::Zero()), -1.0),
                  Error);
}

TEST_CASE("a straight line yields no preliminary loops") {
  std::vector<PlaceRecord> records;
  for (uint32_t k = 0; k < 200; ++k) {
    records.push_back(record_at(k, {0.5 * k, 0.0, 0.0}, Mat3::Zero()));
  }
  GateConfig cfg;
  cfg.beta = 0.0;
  CHECK(find_preliminary_loops(records, cfg).empty());
}

TEST_CASE("exact two-lap circle pairs each revisit with its counterpart") {
  // 200 frames, two laps, circumference 100 m.
  const double radius = 100.0 / (2.0 * M_PI);
  std::vector<PlaceRecord> records;
  for (uint32_t k = 0; k < 200; ++k) {
    const double a = 2.0 * M_PI * k / 100.0;
    records.push_back(record_at(
        k, {radius * std::cos(a), radius * std::sin(a), 0.0}, Mat3::Zero()));
  }
  GateConfig cfg;
  cfg.beta = 1.0;
  const auto pairs = find_preliminary_loops(records, cfg);

  // Brute-force nearest-neighbor oracle over all pairs.
  std::vector<LoopPair> expected;
  for (uint32_t i = cfg.margin; i < 200; ++i) {
    uint32_t best_j = 0;
    double best = 1e300;
    for (uint32_t j = 0; j + cfg.margin <= i; ++j) {
      const double d = (records[i].position - records[j].position).norm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (best < 1.0) expected.push_back({i, best_j, best});
  }
  REQUIRE(pairs.size() == expected.size());
  for (size_t k = 0; k < pairs.size(); ++k) {
    CHECK(pairs[k].query == expected[k].query);
    CHECK(pairs[k].match == expected[k].match);
  }
  // Every second-lap frame pairs with its first-lap counterpart. (Frame 99
  // also gates against frame 0 across the lap seam at distance just under
  // the 1 m gate; the oracle equality above covers it.)
  std::map<uint32_t, uint32_t> by_query;
  for (const auto& p : pairs) by_query[p.query] = p.match;
  for (uint32_t i = 100; i < 200; ++i) {
    REQUIRE(by_query.count(i) == 1);
    CHECK(by_query[i] == i - 100);
  }
}

TEST_CASE("drifted estimates still gate the true revisits") {
  // The covariance-inflated threshold must keep catching loops once the
  // filter has drifted: >= 95% of truth queries produce a gated pair.
  int total_truth = 0;
  int gated = 0;
  for (int seed = 0; seed < 20; ++seed) {
    SynthConfig cfg;
    cfg.frames = 300;
    cfg.seed = uint64_t(400 + seed);
    const SynthDataset ds = generate_dataset(cfg);

    DatasetManifest manifest;
    manifest.frame_count = uint32_t(cfg.frames);
    manifest.controls = ControlLog{};
    manifest.controls->controls = ds.controls;
    manifest.controls->observations = ds.observations;
    for (int k = 0; k < cfg.frames; ++k) {
      manifest.ground_truth.push_back({uint32_t(k), ds.truth[k].t,
                                       ds.truth[k].position,
                                       ds.truth[k].rotation, Mat3::Zero()});
    }
    manifest.synth_config = cfg;

    PipelineConfig pipe;
    const auto records = build_records(manifest, pipe);
    GateConfig gate;
    gate.beta = 1.0;
    const auto pairs = find_preliminary_loops(records, gate);
    std::set<uint32_t> gated_queries;
    for (const auto& p : pairs) gated_queries.insert(p.query);

    std::vector<Vec3> positions;
    for (const auto& s : ds.truth) positions.push_back(s.position);
    for (const auto& t :
         ground_truth_loops(positions, ds.truth_radius_m, gate.margin).pairs) {
      ++total_truth;
      if (gated_queries.count(t.first)) ++gated;
    }
  }
  REQUIRE(total_truth > 1000);
  CHECK(double(gated) / double(total_truth) >= 0.95);
}

TEST_CASE("single pair area is the enlarged unit rectangle") {
  GateConfig cfg;
  cfg.enlargement = 5;
  const auto areas =
      cluster_candidate_areas({{100, 10, 0.0}}, cfg, 300);
  REQUIRE(areas.size() == 1);
  CHECK(areas[0].query_lo == 95);
  CHECK(areas[0].query_hi == 105);
  CHECK(areas[0].match_lo == 5);
  CHECK(areas[0].match_hi == 15);
}

TEST_CASE("a contiguous chain forms one tight area") {
  GateConfig cfg;
  cfg.gap_tolerance = 2;
  cfg.enlargement = 0;
  const auto areas = cluster_candidate_areas(
      {{100, 10, 0.0}, {101, 11, 0.0}, {102, 12, 0.0}}, cfg, 300);
  REQUIRE(areas.size() == 1);
  CHECK(areas[0].query_lo == 100);
  CHECK(areas[0].query_hi == 102);
  CHECK(areas[0].match_lo == 10);
  CHECK(areas[0].match_hi == 12);
}

TEST_CASE("separated pairs form disjoint areas") {
  GateConfig cfg;
  cfg.gap_tolerance = 5;
  const auto areas =
      cluster_candidate_areas({{100, 10, 0.0}, {200, 50, 0.0}}, cfg, 400);
  REQUIRE(areas.size() == 2);
  const auto& a = areas[0];
  const auto& b = areas[1];
  const bool disjoint = a.query_hi < b.query_lo || b.query_hi < a.query_lo ||
                        a.match_hi < b.match_lo || b.match_hi < a.match_lo;
  CHECK(disjoint);
}

TEST_CASE("every pair lands inside exactly one area") {
  Rng rng(13);
  std::vector<LoopPair> pairs;
  for (uint32_t i = 60; i < 600; i += 1 + rng.next_u64() % 4) {
    const long j = long(i) - 500 + long(rng.next_u64() % 21) - 10;
    if (j < 0 || j > long(i) - 30) continue;
    pairs.push_back({i, uint32_t(j), 0.0});
  }
  GateConfig cfg;
  const auto areas = cluster_candidate_areas(pairs, cfg, 600);
  for (const auto& p : pairs) {
    int containing = 0;
    for (const auto& a : areas) {
      if (a.contains(p.query, p.match)) ++containing;
    }
    CHECK(containing == 1);
  }
  // Areas must be pairwise disjoint.
  for (size_t x = 0; x < areas.size(); ++x) {
    for (size_t y = x + 1; y < areas.size(); ++y) {
      const bool overlap = areas[x].query_lo <= areas[y].query_hi &&
                           areas[y].query_lo <= areas[x].query_hi &&
                           areas[x].match_lo <= areas[y].match_hi &&
                           areas[y].match_lo <= areas[x].match_hi;
      CHECK(!overlap);
    }
  }
}

TEST_CASE("long diagonal clusters are chunked instead of boxed") {
  std::vector<LoopPair> pairs;
  for (uint32_t i = 530; i < 1000; ++i) pairs.push_back({i, i - 500, 0.0});
  GateConfig cfg;
  const auto areas = cluster_candidate_areas(pairs, cfg, 1000);
  CHECK(areas.size() >= 5);
  uint64_t cells = 0;
  for (const auto& a : areas) cells += a.cell_count();
  // One bounding box would cost ~470^2 cells; chunking stays well below.
  CHECK(cells < 100000);
  for (const auto& p : pairs) {
    bool covered = false;
    for (const auto& a : areas) covered |= a.contains(p.query, p.match);
    CHECK(covered);
  }
}

TEST_CASE("triangle cover enumerates exactly the search triangle") {
  const auto areas = triangle_cover(100, 30);
  uint64_t cells = 0;
  for (const auto& a : areas) cells += a.cell_count();
  CHECK(cells == triangle_cell_count(100, 30));
  CHECK(triangle_cell_count(100, 30) == 70 * 71 / 2);
  CHECK(triangle_cell_count(30, 30) == 0);
}
