#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "lcdet/image.hpp"
#include "lcdet/pose_filter.hpp"
#include "lcdet/synth.hpp"

namespace lcdet {

// One row of the trajectory file format:
// frame t px py pz qw qx qy qz c11 c12 c13 c22 c23 c33
struct TrajectoryRow {
  uint32_t frame = 0;
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Quat rotation = Quat::Identity();
  Mat3 position_covariance = Mat3::Zero();
};

std::vector<TrajectoryRow> load_trajectory(const std::filesystem::path& path);
void save_trajectory(const std::vector<TrajectoryRow>& rows,
                     const std::filesystem::path& path);

// Controls/observations file: `t ax ay az gx gy gz [px py pz]` per line.
struct ControlLog {
  std::vector<double> timestamps;
  std::vector<ControlInput> controls;
  std::map<int, PositionObservation> observations;
};

ControlLog load_controls(const std::filesystem::path& path);

// A loaded dataset: frame-indexed images plus ground truth and, when
// available, IMU-style controls for the odometry filter.
struct DatasetManifest {
  uint32_t frame_count = 0;
  uint64_t seed = 0;
  double truth_radius_m = 0.0;
  std::vector<std::filesystem::path> image_paths;
  std::vector<TrajectoryRow> ground_truth;
  std::optional<ControlLog> controls;
  std::optional<SynthConfig> synth_config;  // present for generated datasets
};

DatasetManifest load_manifest(const std::filesystem::path& manifest_path);

// Directory of ordered grayscale images plus a pose file with one 3x4
// row-major pose per line. Poses become ground truth with zero covariance.
DatasetManifest load_kitti_style(const std::filesystem::path& image_dir,
                                 const std::filesystem::path& pose_file);

// Frame access used by descriptor extraction.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual uint32_t frame_count() const = 0;
  virtual GrayImage frame(uint32_t index) const = 0;
};

// Reads frames from the manifest's image files.
std::unique_ptr<FrameSource> make_disk_frames(const DatasetManifest& manifest);

// Renders frames on demand from an in-memory synthetic dataset.
std::unique_ptr<FrameSource> make_synth_frames(std::shared_ptr<SynthDataset> ds);

}  // namespace lcdet
