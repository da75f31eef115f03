#include "lcdet/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lcdet/error.hpp"

namespace lcdet {

namespace fs = std::filesystem;

std::vector<TrajectoryRow> load_trajectory(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, path.string() + ": cannot open");
  std::vector<TrajectoryRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TrajectoryRow r;
    double qw, qx, qy, qz, c11, c12, c13, c22, c23, c33;
    if (!(ls >> r.frame >> r.t >> r.position.x() >> r.position.y() >>
          r.position.z() >> qw >> qx >> qy >> qz >> c11 >> c12 >> c13 >> c22 >>
          c23 >> c33)) {
      fail(ErrorCode::io,
           path.string() + ": malformed trajectory line " +
               std::to_string(lineno));
    }
    r.rotation = Quat(qw, qx, qy, qz).normalized();
    r.position_covariance << c11, c12, c13, c12, c22, c23, c13, c23, c33;
    rows.push_back(r);
  }
  return rows;
}

void save_trajectory(const std::vector<TrajectoryRow>& rows,
                     const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, path.string() + ": cannot open for writing");
  char line[768];
  for (const auto& r : rows) {
    const auto& c = r.position_covariance;
    const int len = std::snprintf(
        line, sizeof(line),
        "%u %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
        "%.17g %.17g %.17g %.17g\n",
        r.frame, r.t, r.position.x(), r.position.y(), r.position.z(),
        r.rotation.w(), r.rotation.x(), r.rotation.y(), r.rotation.z(),
        c(0, 0), c(0, 1), c(0, 2), c(1, 1), c(1, 2), c(2, 2));
    out.write(line, len);
  }
  if (!out) fail(ErrorCode::io, path.string() + ": write failed");
}

ControlLog load_controls(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, path.string() + ": cannot open");
  ControlLog log;
  std::string line;
  int frame = 0;
  double prev_t = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    double t;
    ControlInput c;
    if (!(ls >> t >> c.linear_acceleration.x() >> c.linear_acceleration.y() >>
          c.linear_acceleration.z() >> c.angular_velocity.x() >>
          c.angular_velocity.y() >> c.angular_velocity.z())) {
      fail(ErrorCode::io,
           path.string() + ": malformed control line for frame " +
               std::to_string(frame));
    }
    c.dt = frame == 0 ? 0.0 : t - prev_t;
    Vec3 obs;
    if (ls >> obs.x() >> obs.y() >> obs.z()) {
      log.observations[frame] = {obs};
    }
    log.timestamps.push_back(t);
    log.controls.push_back(c);
    prev_t = t;
    ++frame;
  }
  // Frame 0 never propagates; give it the nominal step for completeness.
  if (log.controls.size() > 1) log.controls[0].dt = log.controls[1].dt;
  return log;
}

DatasetManifest load_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorCode::io, manifest_path.string() + ": cannot open");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, manifest_path.string() + ": " + e.what());
  }

  DatasetManifest m;
  const fs::path base = manifest_path.parent_path();
  try {
    m.frame_count = j.at("frame_count").get<uint32_t>();
    m.seed = j.at("seed").get<uint64_t>();
    m.truth_radius_m = j.at("truth_radius_m").get<double>();

    const fs::path image_dir = base / j.at("image_dir").get<std::string>();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(image_dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    m.image_paths = std::move(files);

    m.ground_truth =
        load_trajectory(base / j.at("ground_truth_file").get<std::string>());
    const std::string controls_name =
        j.value("controls_file", std::string());
    if (!controls_name.empty()) {
      m.controls = load_controls(base / controls_name);
    }
    if (j.contains("config")) {
      const auto& c = j.at("config");
      SynthConfig sc;
      sc.trajectory = trajectory_from_string(c.at("trajectory"));
      sc.scale_m = c.at("scale_m");
      sc.frames = c.at("frames");
      sc.dt = c.at("dt");
      sc.gyro_noise = c.at("gyro_noise");
      sc.accel_noise = c.at("accel_noise");
      sc.obs_every = c.at("obs_every");
      sc.obs_noise_m = c.at("obs_noise_m");
      sc.image_size = c.at("image_size");
      const auto& il = c.at("illumination");
      sc.illumination = {il.at("gain_lo"),  il.at("gain_hi"),
                         il.at("bias_lo"),  il.at("bias_hi"),
                         il.at("gamma_lo"), il.at("gamma_hi")};
      const auto& al = c.at("alias");
      sc.alias = {al.at("enabled"), al.at("source_lo"), al.at("source_hi"),
                  al.at("target_lo"), al.at("target_hi")};
      sc.seed = m.seed;
      m.synth_config = sc;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io,
         manifest_path.string() + ": bad manifest: " + e.what());
  }

  if (m.image_paths.size() != m.frame_count ||
      m.ground_truth.size() != m.frame_count ||
      (m.controls && m.controls->controls.size() != m.frame_count)) {
    std::ostringstream os;
    os << manifest_path.string() << ": frame_count " << m.frame_count
       << " does not match images (" << m.image_paths.size()
       << ") / ground truth (" << m.ground_truth.size() << ")";
    fail(ErrorCode::io, os.str());
  }
  for (uint32_t k = 0; k < m.frame_count; ++k) {
    if (m.ground_truth[k].frame != k) {
      fail(ErrorCode::io,
           manifest_path.string() + ": ground-truth frames not contiguous");
    }
  }
  return m;
}

DatasetManifest load_kitti_style(const fs::path& image_dir,
                                 const fs::path& pose_file) {
  DatasetManifest m;
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(image_dir, ec)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (ec) fail(ErrorCode::io, image_dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  m.image_paths = std::move(files);

  std::ifstream in(pose_file);
  if (!in) fail(ErrorCode::io, pose_file.string() + ": cannot open");
  std::string line;
  uint32_t frame = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    double m3x4[12];
    for (int k = 0; k < 12; ++k) {
      if (!(ls >> m3x4[k])) {
        fail(ErrorCode::io, pose_file.string() + ": malformed pose line " +
                                std::to_string(frame));
      }
    }
    Mat3 rot;
    rot << m3x4[0], m3x4[1], m3x4[2], m3x4[4], m3x4[5], m3x4[6], m3x4[8],
        m3x4[9], m3x4[10];
    TrajectoryRow r;
    r.frame = frame;
    r.t = double(frame);
    r.position = {m3x4[3], m3x4[7], m3x4[11]};
    r.rotation = Quat(rot).normalized();
    m.ground_truth.push_back(r);
    ++frame;
  }
  if (m.image_paths.size() != m.ground_truth.size()) {
    std::ostringstream os;
    os << "image/pose count mismatch: " << m.image_paths.size()
       << " images vs " << m.ground_truth.size() << " poses";
    fail(ErrorCode::io, os.str());
  }
  m.frame_count = uint32_t(m.ground_truth.size());
  return m;
}

namespace {

class DiskFrames final : public FrameSource {
 public:
  explicit DiskFrames(const DatasetManifest& manifest)
      : paths_(manifest.image_paths) {}

  uint32_t frame_count() const override { return uint32_t(paths_.size()); }
  GrayImage frame(uint32_t index) const override {
    if (index >= paths_.size()) {
      fail(ErrorCode::invalid_argument,
           "frame " + std::to_string(index) + " out of range");
    }
    return load_image(paths_[index]);
  }

 private:
  std::vector<fs::path> paths_;
};

class SynthFrames final : public FrameSource {
 public:
  explicit SynthFrames(std::shared_ptr<SynthDataset> ds) : ds_(std::move(ds)) {}

  uint32_t frame_count() const override {
    return uint32_t(ds_->truth.size());
  }
  GrayImage frame(uint32_t index) const override {
    return render_frame(*ds_, int(index));
  }

 private:
  std::shared_ptr<SynthDataset> ds_;
};

}  // namespace

std::unique_ptr<FrameSource> make_disk_frames(const DatasetManifest& manifest) {
  return std::make_unique<DiskFrames>(manifest);
}

std::unique_ptr<FrameSource> make_synth_frames(
    std::shared_ptr<SynthDataset> ds) {
  return std::make_unique<SynthFrames>(std::move(ds));
}

}  // namespace lcdet
