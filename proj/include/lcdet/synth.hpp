#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lcdet/image.hpp"
#include "lcdet/pose_filter.hpp"

namespace lcdet {

enum class Trajectory { circle_two_lap, figure_eight, line };

std::string to_string(Trajectory t);
Trajectory trajectory_from_string(const std::string& s);

// Per-frame illumination draw ranges. Gains/biases are sampled uniformly;
// gamma of 1 keeps the transform linear.
struct IlluminationRange {
  double gain_lo = 1.0, gain_hi = 1.0;
  double bias_lo = 0.0, bias_hi = 0.0;
  double gamma_lo = 1.0, gamma_hi = 1.0;
};

// Two congruent arcs (fractions of one revolution) whose views are forced to
// share texture: frames inside the source arc render the target arc's
// texture while keeping their true pose. Supported for circular trajectories.
struct AliasSpec {
  bool enabled = false;
  double source_lo = 0.55, source_hi = 0.65;
  double target_lo = 0.10, target_hi = 0.20;
};

struct SynthConfig {
  Trajectory trajectory = Trajectory::circle_two_lap;
  double scale_m = 30.0;     // circle radius / figure-eight half-width / line length
  int frames = 1000;
  double dt = 0.1;           // s
  double gyro_noise = 0.002; // rad/s, per-sample std added to controls
  double accel_noise = 0.05; // m/s^2
  int obs_every = 20;        // position observation period, 0 disables
  double obs_noise_m = 0.5;
  IlluminationRange illumination;
  AliasSpec alias;
  uint64_t seed = 42;
  int image_size = 256;

  void validate() const;
};

struct GroundTruthState {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Quat rotation = Quat::Identity();
  Vec3 velocity = Vec3::Zero();
};

struct SynthDataset {
  SynthConfig config;
  std::vector<GroundTruthState> truth;
  std::vector<ControlInput> controls;  // controls[n] moves frame n-1 to n
  std::map<int, PositionObservation> observations;
  double truth_radius_m = 0.0;  // 3 x median inter-frame displacement
};

// Analytic poses plus controls that are the exact discrete inverses of the
// propagation model, so noiseless dead reckoning reproduces the trajectory
// to round-off. Noise and sparse position observations are drawn from the
// config seed.
SynthDataset generate_dataset(const SynthConfig& cfg);

// Ground-truth poses and controls only (no observations or noise draws).
std::vector<GroundTruthState> generate_trajectory(const SynthConfig& cfg,
                                                  std::vector<ControlInput>* controls);

// Per-frame illumination parameters, derived from (seed, frame) so frames
// can be re-rendered independently.
struct FrameIllumination {
  double gain = 1.0;
  double bias = 0.0;
  double gamma = 1.0;
};
FrameIllumination frame_illumination(const SynthConfig& cfg, int frame);

// gain*I + bias (rounded, clamped), then gamma. Exact on pixel values where
// gain*value is integral, which the renderer's intensity grid guarantees for
// the gains used by the invariance checks.
void apply_illumination(GrayImage& img, double gain, double bias, double gamma);

// Deterministic view of the world at a pose: a multi-octave integer-noise
// patch anchored to the quantized world cell under the camera, so frames in
// the same cell render identical images. Base intensities land on multiples
// of 10 in [30, 230] before the illumination transform.
GrayImage render_frame(const SynthDataset& ds, int frame);
GrayImage render_frame_with(const SynthDataset& ds, int frame,
                            const FrameIllumination& illum);

// Writes images (PGM), the controls/observations file, the ground-truth
// trajectory and a JSON manifest. Returns the manifest path.
std::filesystem::path write_dataset(const SynthDataset& ds,
                                    const std::filesystem::path& dir);

}  // namespace lcdet
