#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lcdet/dird.hpp"
#include "lcdet/retrieval.hpp"
#include "lcdet/selector.hpp"
#include "lcdet/synth.hpp"

namespace lcdet {

// Every tunable of the pipeline, with the defaults its owning module states.
// Serializes as a versioned `key = value` file; unknown keys are rejected.
struct PipelineConfig {
  int version = 1;
  uint64_t seed = 42;
  int threads = 1;
  int margin = 30;

  struct Filter {
    double gyro_noise = 0.002;   // rad/s per-sample std
    double accel_noise = 0.05;   // m/s^2 per-sample std
    double obs_noise_m = 0.5;    // position observation std
  } filter;

  GateConfig gate;
  DirdConfig dird;
  RetrievalConfig retrieval;
  SynthConfig synth;

  struct Eval {
    double truth_radius_m = 0.0;  // 0 = 3 x median inter-frame displacement
    int match_tolerance = 5;
    double sweep_lo = 0.05;
    double sweep_hi = 0.95;
    int sweep_count = 10;
  } eval;

  bool bench_parallel = false;

  NoiseConfig noise_config() const {
    return NoiseConfig::from_sigmas(filter.gyro_noise, filter.accel_noise,
                                    filter.obs_noise_m);
  }
  std::vector<double> sweep_thresholds() const;
  void validate() const;
};

PipelineConfig parse_config_file(const std::filesystem::path& path);
PipelineConfig parse_config_text(const std::string& text);
std::string serialize_config(const PipelineConfig& cfg);

// Set/get a single key; throws Error(config) naming an unknown key or a bad
// value. The same table backs the file parser and the C API.
void config_set(PipelineConfig& cfg, const std::string& key,
                const std::string& value);
std::string config_get(const PipelineConfig& cfg, const std::string& key);
std::vector<std::string> config_keys();

}  // namespace lcdet
