#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "lcdet/config.hpp"
#include "lcdet/dataset.hpp"
#include "lcdet/descriptor_cache.hpp"
#include "lcdet/error.hpp"
#include "lcdet/pipeline.hpp"
#include "lcdet/synth.hpp"

using namespace lcdet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("config round-trips with all defaults materialized") {
  PipelineConfig cfg;
  config_set(cfg, "gate.beta_m", "2.5");
  config_set(cfg, "synth.frames", "123");
  const std::string text = serialize_config(cfg);
  const PipelineConfig back = parse_config_text(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.gate.beta == 2.5);
  CHECK(back.synth.frames == 123);
  // Every declared key appears in the serialized form.
  for (const auto& key : config_keys()) {
    CHECK(text.find(key + " = ") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected by name") {
  try {
    parse_config_text("no_such_key = 1\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    CHECK(std::string(e.what()).find("no_such_key") != std::string::npos);
  }
}

TEST_CASE("comments and blank lines are accepted") {
  const PipelineConfig cfg = parse_config_text(
      "# a comment\n\nmargin = 25   # trailing comment\nseed = 7\n");
  CHECK(cfg.margin == 25);
  CHECK(cfg.seed == 7);
  CHECK(cfg.gate.margin == 25);  // margin is shared with the gate
}

TEST_CASE("bad values name the offending key") {
  try {
    parse_config_text("gate.beta_m = fast\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("gate.beta_m") != std::string::npos);
  }
}

TEST_CASE("unsupported config versions are rejected") {
  CHECK_THROWS_AS(parse_config_text("version = 2\n"), Error);
}

TEST_CASE("out-of-range values fail validation") {
  CHECK_THROWS_AS(parse_config_text("retrieval.sequence_length = 4\n"), Error);
  CHECK_THROWS_AS(parse_config_text("retrieval.similarity_threshold = 1.5\n"),
                  Error);
  CHECK_THROWS_AS(parse_config_text("threads = 0\n"), Error);
}

TEST_CASE("descriptor cache files round-trip byte-identically") {
  const fs::path dir = temp_dir("lcdet_cache_roundtrip");
  DescriptorCache cache(8, Quantization::byte);
  cache.insert(3, {1, 2, 3, 4, 5, 6, 7, 256});
  cache.insert(1, {129, 129, 129, 129, 1, 1, 1, 1});
  const fs::path path = dir / "d.cache";
  cache.save(path);
  const std::string first = slurp(path);

  DescriptorCache loaded = DescriptorCache::load(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.dimension() == 8);
  CHECK(loaded.quantized(3) == cache.quantized(3));
  loaded.save(path);
  CHECK(slurp(path) == first);
  fs::remove_all(dir);
}

TEST_CASE("extraction is lazy, appendable and idempotent") {
  const fs::path dir = temp_dir("lcdet_extract");
  SynthConfig synth;
  synth.frames = 24;
  synth.seed = 11;
  const SynthDataset ds = generate_dataset(synth);
  write_dataset(ds, dir);
  const DatasetManifest m = load_manifest(dir / "manifest.json");
  const auto frames = make_disk_frames(m);

  PipelineConfig cfg;
  const fs::path cache_path = dir / "descriptors.cache";
  run_extract(m, *frames, cfg, cache_path, "0-4,10-12");
  {
    const DescriptorCache cache = DescriptorCache::load(cache_path);
    CHECK(cache.size() == 8);
    CHECK(cache.contains(0));
    CHECK(cache.contains(12));
    CHECK(!cache.contains(5));
  }
  const std::string first = slurp(cache_path);
  run_extract(m, *frames, cfg, cache_path, "0-4,10-12");
  CHECK(slurp(cache_path) == first);  // byte-identical rerun

  run_extract(m, *frames, cfg, cache_path, "");
  const DescriptorCache full = DescriptorCache::load(cache_path);
  CHECK(full.size() == 24);
  fs::remove_all(dir);
}

TEST_CASE("frame ranges are validated") {
  SynthConfig synth;
  synth.frames = 10;
  const SynthDataset ds = generate_dataset(synth);
  CHECK_THROWS_AS(parse_frame_ranges("5-20", 10), Error);
  CHECK_THROWS_AS(parse_frame_ranges("abc", 10), Error);
  CHECK(parse_frame_ranges("", 10).size() == 10);
  const auto picked = parse_frame_ranges("1-3,7", 10);
  CHECK(picked == std::set<uint32_t>{1, 2, 3, 7});
}

TEST_CASE("kitti-style layouts load into a manifest") {
  const fs::path dir = temp_dir("lcdet_kitti");
  fs::create_directories(dir / "images");
  SynthConfig synth;
  synth.frames = 10;
  synth.seed = 77;
  const SynthDataset ds = generate_dataset(synth);
  for (int k = 0; k < 10; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.pgm", k);
    save_pgm(render_frame(ds, k), dir / "images" / name);
  }
  {
    std::ofstream poses(dir / "poses.txt");
    for (int k = 0; k < 10; ++k) {
      // Identity rotation, translation (k, 0, 0).
      poses << "1 0 0 " << k << " 0 1 0 0 0 0 1 0\n";
    }
  }
  const DatasetManifest m = load_kitti_style(dir / "images", dir / "poses.txt");
  REQUIRE(m.frame_count == 10);
  CHECK(m.ground_truth[3].position.x() == 3.0);
  CHECK(m.ground_truth[3].rotation.angularDistance(Quat::Identity()) == 0.0);
  CHECK(m.ground_truth[3].position_covariance.norm() == 0.0);
  CHECK(!m.controls.has_value());

  // Count mismatch: one pose too few.
  {
    std::ofstream poses(dir / "poses_bad.txt");
    for (int k = 0; k < 9; ++k) poses << "1 0 0 0 0 1 0 0 0 0 1 0\n";
  }
  try {
    load_kitti_style(dir / "images", dir / "poses_bad.txt");
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("10") != std::string::npos);
    CHECK(what.find("9") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("manifest loader reports inconsistent frame counts") {
  const fs::path dir = temp_dir("lcdet_manifest_bad");
  SynthConfig synth;
  synth.frames = 12;
  const SynthDataset ds = generate_dataset(synth);
  const fs::path manifest = write_dataset(ds, dir);
  fs::remove(dir / "images" / "frame_000005.pgm");
  CHECK_THROWS_AS(load_manifest(manifest), Error);
  fs::remove_all(dir);
}

TEST_CASE("trajectory files round-trip exactly") {
  const fs::path dir = temp_dir("lcdet_traj");
  std::vector<TrajectoryRow> rows;
  for (uint32_t k = 0; k < 5; ++k) {
    TrajectoryRow r;
    r.frame = k;
    r.t = 0.1 * k;
    r.position = {1.0 / 3.0 * k, -2.5, 0.125};
    r.rotation = Quat(Eigen::AngleAxisd(0.3 * k, Vec3::UnitZ()));
    r.position_covariance = 0.01 * k * Mat3::Identity();
    rows.push_back(r);
  }
  save_trajectory(rows, dir / "traj.txt");
  const auto back = load_trajectory(dir / "traj.txt");
  REQUIRE(back.size() == rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    CHECK(back[k].frame == rows[k].frame);
    CHECK(back[k].t == rows[k].t);
    CHECK((back[k].position - rows[k].position).norm() == 0.0);
    CHECK((back[k].position_covariance - rows[k].position_covariance).norm() ==
          0.0);
  }
  fs::remove_all(dir);
}
