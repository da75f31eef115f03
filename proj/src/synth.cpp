#include "lcdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "lcdet/error.hpp"
#include "lcdet/rng.hpp"

namespace lcdet {

namespace {

struct AnalyticState {
  Vec3 position;
  Vec3 velocity;
  Quat rotation;
};

// Heading follows the direction of travel (yaw about +z).
Quat yaw_quat(double yaw) {
  return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
}

AnalyticState analytic_state(const SynthConfig& cfg, double t) {
  const double duration = cfg.frames * cfg.dt;
  AnalyticState s;
  switch (cfg.trajectory) {
    case Trajectory::circle_two_lap: {
      const double omega = 2.0 * 2.0 * M_PI / duration;  // two laps
      const double r = cfg.scale_m;
      const double a = omega * t;
      s.position = {r * std::cos(a), r * std::sin(a), 0.0};
      s.velocity = {-r * omega * std::sin(a), r * omega * std::cos(a), 0.0};
      s.rotation = yaw_quat(a + M_PI / 2.0);
      break;
    }
    case Trajectory::figure_eight: {
      const double w = 2.0 * M_PI / duration;  // one pass
      const double a = cfg.scale_m;
      const double th = w * t;
      s.position = {a * std::sin(th), a * std::sin(th) * std::cos(th),
                    0.15 * a * std::sin(2.0 * th)};
      s.velocity = {a * w * std::cos(th), a * w * std::cos(2.0 * th),
                    0.3 * a * w * std::cos(2.0 * th)};
      const double yaw = std::atan2(s.velocity.y(), s.velocity.x());
      s.rotation = yaw_quat(yaw);
      break;
    }
    case Trajectory::line: {
      const double speed = cfg.scale_m / duration;
      s.position = {speed * t, 0.0, 0.0};
      s.velocity = {speed, 0.0, 0.0};
      s.rotation = Quat::Identity();
      break;
    }
  }
  return s;
}

double median_step(const std::vector<GroundTruthState>& truth) {
  std::vector<double> steps;
  steps.reserve(truth.size());
  for (size_t i = 1; i < truth.size(); ++i) {
    steps.push_back((truth[i].position - truth[i - 1].position).norm());
  }
  if (steps.empty()) return 0.0;
  std::nth_element(steps.begin(), steps.begin() + long(steps.size() / 2),
                   steps.end());
  return steps[steps.size() / 2];
}

// ---- integer texture path ------------------------------------------------
//
// World coordinates are snapped to 1/1024 m fixed point; everything after
// that is integer arithmetic so rendered images are identical across
// platforms.

constexpr int64_t kFpUnit = 1024;

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

uint64_t lattice_hash(uint64_t seed, int64_t lx, int64_t ly, int octave) {
  uint64_t h = mix64(seed ^ 0x7c9d4a1b3e5f6071ull);
  h = hash_combine(h, uint64_t(lx));
  h = hash_combine(h, uint64_t(ly));
  h = hash_combine(h, uint64_t(octave));
  return h;
}

// Smoothstep f^2 (3 - 2f) in 0.16 fixed point.
int64_t fade16(int64_t f16) {
  const int64_t f2 = (f16 * f16) >> 16;
  return (f2 * (3 * 65536 - 2 * f16)) >> 16;
}

int value_noise(uint64_t seed, int64_t x_fp, int64_t y_fp, int64_t cell_fp) {
  // Octave wavelengths: cell * {4, 2, 1, 1/2}; weights sum to 256.
  static constexpr int kWeights[4] = {104, 72, 48, 32};
  int64_t acc = 0;
  for (int o = 0; o < 4; ++o) {
    const int64_t lambda = (cell_fp * 4) >> o;
    const int64_t lx = floor_div(x_fp, lambda);
    const int64_t ly = floor_div(y_fp, lambda);
    const int64_t fx = ((x_fp - lx * lambda) << 16) / lambda;
    const int64_t fy = ((y_fp - ly * lambda) << 16) / lambda;
    const int64_t ux = fade16(fx);
    const int64_t uy = fade16(fy);
    const int64_t h00 = int64_t(lattice_hash(seed, lx, ly, o) & 0xff);
    const int64_t h10 = int64_t(lattice_hash(seed, lx + 1, ly, o) & 0xff);
    const int64_t h01 = int64_t(lattice_hash(seed, lx, ly + 1, o) & 0xff);
    const int64_t h11 = int64_t(lattice_hash(seed, lx + 1, ly + 1, o) & 0xff);
    // Rows at ly and ly+1 in 8.16 fixed point, then blend vertically.
    const int64_t row0 = (h00 << 16) + (h10 - h00) * ux;
    const int64_t row1 = (h01 << 16) + (h11 - h01) * ux;
    const int64_t v = row0 + (((row1 - row0) * uy) >> 16);
    acc += (v >> 16) * kWeights[o];
  }
  return int(std::clamp<int64_t>(acc >> 8, 0, 255));
}

struct RenderGeometry {
  int64_t cell_fp = 0;  // texture cell size, fixed point
  int64_t gs_fp = 0;    // ground meters per pixel, fixed point
  bool alias = false;
  double alias_cos = 1.0, alias_sin = 0.0;  // rotation source -> target
  Eigen::Vector2d sector_lo = Eigen::Vector2d::UnitX();
  Eigen::Vector2d sector_hi = Eigen::Vector2d::UnitX();
};

// Quantize to 2^-30 so trig constants computed at setup time cannot wobble
// the integer render path.
double q30(double v) { return std::round(v * 1073741824.0) / 1073741824.0; }

RenderGeometry make_geometry(const SynthDataset& ds) {
  RenderGeometry g;
  const double cell = std::max(ds.truth_radius_m, 1e-3);
  // Keep cell_fp a multiple of 16 so gs = cell/16 stays exact.
  g.cell_fp = std::max<int64_t>(16, 16 * llround(cell * kFpUnit / 16.0));
  g.gs_fp = g.cell_fp >> 4;
  const auto& alias = ds.config.alias;
  if (alias.enabled) {
    if (ds.config.trajectory != Trajectory::circle_two_lap) {
      fail(ErrorCode::config,
           "synth.alias is only supported for circle_two_lap trajectories");
    }
    g.alias = true;
    const double delta =
        (alias.target_lo - alias.source_lo) * 2.0 * M_PI;
    g.alias_cos = q30(std::cos(delta));
    g.alias_sin = q30(std::sin(delta));
    const double lo = alias.source_lo * 2.0 * M_PI;
    const double hi = alias.source_hi * 2.0 * M_PI;
    g.sector_lo = {q30(std::cos(lo)), q30(std::sin(lo))};
    g.sector_hi = {q30(std::cos(hi)), q30(std::sin(hi))};
  }
  return g;
}

bool in_sector(const RenderGeometry& g, const Eigen::Vector2d& p) {
  const double c0 = g.sector_lo.x() * p.y() - g.sector_lo.y() * p.x();
  const double c1 = p.x() * g.sector_hi.y() - p.y() * g.sector_hi.x();
  return c0 >= 0.0 && c1 >= 0.0;
}

}  // namespace

std::string to_string(Trajectory t) {
  switch (t) {
    case Trajectory::circle_two_lap: return "circle_two_lap";
    case Trajectory::figure_eight: return "figure_eight";
    case Trajectory::line: return "line";
  }
  return "circle_two_lap";
}

Trajectory trajectory_from_string(const std::string& s) {
  if (s == "circle_two_lap") return Trajectory::circle_two_lap;
  if (s == "figure_eight") return Trajectory::figure_eight;
  if (s == "line") return Trajectory::line;
  fail(ErrorCode::config, "unknown trajectory '" + s + "'");
}

void SynthConfig::validate() const {
  if (!(scale_m > 0.0)) fail(ErrorCode::config, "synth.scale_m must be > 0");
  if (frames < 2) fail(ErrorCode::config, "synth.frames must be >= 2");
  if (!(dt > 0.0)) fail(ErrorCode::config, "synth.dt must be > 0");
  if (gyro_noise < 0.0 || accel_noise < 0.0 || obs_noise_m < 0.0) {
    fail(ErrorCode::config, "synth noise levels must be >= 0");
  }
  if (obs_every < 0) fail(ErrorCode::config, "synth.obs_every must be >= 0");
  if (image_size < 64) fail(ErrorCode::config, "synth.image_size must be >= 64");
  if (illumination.gain_lo > illumination.gain_hi ||
      illumination.bias_lo > illumination.bias_hi ||
      illumination.gamma_lo > illumination.gamma_hi) {
    fail(ErrorCode::config, "synth illumination ranges must have lo <= hi");
  }
  // Base intensities live in [30, 230]; reject draws that could saturate.
  if (illumination.gain_hi * 230.0 + illumination.bias_hi > 255.0 ||
      illumination.gain_lo * 30.0 + illumination.bias_lo < 0.0) {
    fail(ErrorCode::config,
         "synth illumination range saturates pixels (needs gain*230+bias <= "
         "255 and gain*30+bias >= 0)");
  }
  if (alias.enabled) {
    const double sw = alias.source_hi - alias.source_lo;
    const double tw = alias.target_hi - alias.target_lo;
    if (!(sw > 0.0) || std::abs(sw - tw) > 1e-12) {
      fail(ErrorCode::config,
           "synth alias arcs must be nonempty and of equal width");
    }
    if (sw > 0.25) {
      fail(ErrorCode::config, "synth alias arcs must span <= 0.25 revolutions");
    }
  }
}

std::vector<GroundTruthState> generate_trajectory(
    const SynthConfig& cfg, std::vector<ControlInput>* controls) {
  cfg.validate();
  const int n = cfg.frames;
  std::vector<GroundTruthState> truth(n);

  // Analytic positions and rotations; velocities are chosen so the discrete
  // propagation step reproduces the positions exactly:
  //   p_k = p_{k-1} + (v_{k-1} + v_k)/2 * dt  =>  v_k = 2(p_k - p_{k-1})/dt - v_{k-1}
  for (int k = 0; k < n; ++k) {
    const double t = k * cfg.dt;
    const AnalyticState s = analytic_state(cfg, t);
    truth[k].t = t;
    truth[k].position = s.position;
    truth[k].rotation = s.rotation;
  }
  truth[0].velocity = analytic_state(cfg, 0.0).velocity;
  for (int k = 1; k < n; ++k) {
    truth[k].velocity =
        2.0 * (truth[k].position - truth[k - 1].position) / cfg.dt -
        truth[k - 1].velocity;
  }

  if (controls) {
    controls->assign(size_t(n), ControlInput{});
    // Frame 0 carries a stationary-consistent record for timestamp alignment.
    (*controls)[0].dt = cfg.dt;
    (*controls)[0].linear_acceleration =
        truth[0].rotation.toRotationMatrix().transpose() * (-kGravity);
    for (int k = 1; k < n; ++k) {
      const Mat3 rot_prev = truth[k - 1].rotation.toRotationMatrix();
      ControlInput& c = (*controls)[k];
      c.dt = cfg.dt;
      c.angular_velocity =
          quat_log(truth[k - 1].rotation.conjugate() * truth[k].rotation) /
          cfg.dt;
      const Vec3 accel_world =
          (truth[k].velocity - truth[k - 1].velocity) / cfg.dt;
      c.linear_acceleration = rot_prev.transpose() * (accel_world - kGravity);
    }
  }
  return truth;
}

SynthDataset generate_dataset(const SynthConfig& cfg) {
  SynthDataset ds;
  ds.config = cfg;
  ds.truth = generate_trajectory(cfg, &ds.controls);
  ds.truth_radius_m = 3.0 * median_step(ds.truth);

  Rng noise_rng(hash_combine(cfg.seed, 0x636f6e74726f6cull));
  for (int k = 1; k < cfg.frames; ++k) {
    ds.controls[k].angular_velocity += noise_rng.normal3(cfg.gyro_noise);
    ds.controls[k].linear_acceleration += noise_rng.normal3(cfg.accel_noise);
  }

  Rng obs_rng(hash_combine(cfg.seed, 0x6f627365727665ull));
  if (cfg.obs_every > 0) {
    for (int k = cfg.obs_every; k < cfg.frames; k += cfg.obs_every) {
      ds.observations[k] = {ds.truth[k].position +
                            obs_rng.normal3(cfg.obs_noise_m)};
    }
  }
  return ds;
}

FrameIllumination frame_illumination(const SynthConfig& cfg, int frame) {
  const auto& r = cfg.illumination;
  FrameIllumination out;
  auto unit = [&](uint64_t tag) {
    return double(hash_combine(hash_combine(cfg.seed, tag), uint64_t(frame)) >>
                  11) *
           0x1.0p-53;
  };
  out.gain = r.gain_lo + (r.gain_hi - r.gain_lo) * unit(1);
  out.bias = r.bias_lo + (r.bias_hi - r.bias_lo) * unit(2);
  out.gamma = r.gamma_lo + (r.gamma_hi - r.gamma_lo) * unit(3);
  return out;
}

void apply_illumination(GrayImage& img, double gain, double bias,
                        double gamma) {
  for (auto& px : img.pixels) {
    const long v = std::lround(gain * double(px) + bias);
    px = uint8_t(std::clamp(v, 0L, 255L));
  }
  if (gamma != 1.0) {
    uint8_t lut[256];
    for (int i = 0; i < 256; ++i) {
      const long v = std::lround(255.0 * std::pow(i / 255.0, gamma));
      lut[i] = uint8_t(std::clamp(v, 0L, 255L));
    }
    for (auto& px : img.pixels) px = lut[px];
  }
}

GrayImage render_frame_with(const SynthDataset& ds, int frame,
                            const FrameIllumination& illum) {
  if (frame < 0 || frame >= int(ds.truth.size())) {
    fail(ErrorCode::invalid_argument,
         "render_frame: frame " + std::to_string(frame) + " out of range");
  }
  const RenderGeometry g = make_geometry(ds);
  Eigen::Vector2d p = ds.truth[size_t(frame)].position.head<2>();
  if (g.alias && in_sector(g, p)) {
    p = {g.alias_cos * p.x() - g.alias_sin * p.y(),
         g.alias_sin * p.x() + g.alias_cos * p.y()};
  }

  // Anchor the patch at the center of the camera's texture cell.
  const int64_t px_fp = llround(p.x() * kFpUnit);
  const int64_t py_fp = llround(p.y() * kFpUnit);
  const int64_t ax_fp =
      floor_div(px_fp, g.cell_fp) * g.cell_fp + g.cell_fp / 2;
  const int64_t ay_fp =
      floor_div(py_fp, g.cell_fp) * g.cell_fp + g.cell_fp / 2;

  const int size = ds.config.image_size;
  GrayImage img = GrayImage::filled(size, size, 0);
  const int half = size / 2;
  for (int y = 0; y < size; ++y) {
    const int64_t wy = ay_fp + int64_t(y - half) * g.gs_fp;
    for (int x = 0; x < size; ++x) {
      const int64_t wx = ax_fp + int64_t(x - half) * g.gs_fp;
      const int noise = value_noise(ds.config.seed, wx, wy, g.cell_fp);
      // Quantize to multiples of 10 in [30, 230]: 21 intensity levels.
      img.at(x, y) = uint8_t(30 + 10 * ((noise * 21) >> 8));
    }
  }
  apply_illumination(img, illum.gain, illum.bias, illum.gamma);
  return img;
}

GrayImage render_frame(const SynthDataset& ds, int frame) {
  return render_frame_with(ds, frame, frame_illumination(ds.config, frame));
}

std::filesystem::path write_dataset(const SynthDataset& ds,
                                    const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (ec) fail(ErrorCode::io, dir.string() + ": " + ec.message());

  char name[64];
  for (int k = 0; k < int(ds.truth.size()); ++k) {
    std::snprintf(name, sizeof(name), "frame_%06d.pgm", k);
    save_pgm(render_frame(ds, k), dir / "images" / name);
  }

  // Controls / observations: t ax ay az gx gy gz [px py pz]
  {
    std::ofstream out(dir / "controls.txt");
    if (!out) fail(ErrorCode::io, (dir / "controls.txt").string() + ": cannot open");
    char line[512];
    for (size_t k = 0; k < ds.controls.size(); ++k) {
      const auto& c = ds.controls[k];
      int len = std::snprintf(
          line, sizeof(line),
          "%.17g %.17g %.17g %.17g %.17g %.17g %.17g", ds.truth[k].t,
          c.linear_acceleration.x(), c.linear_acceleration.y(),
          c.linear_acceleration.z(), c.angular_velocity.x(),
          c.angular_velocity.y(), c.angular_velocity.z());
      out.write(line, len);
      if (auto it = ds.observations.find(int(k)); it != ds.observations.end()) {
        len = std::snprintf(line, sizeof(line), " %.17g %.17g %.17g",
                            it->second.observed_position.x(),
                            it->second.observed_position.y(),
                            it->second.observed_position.z());
        out.write(line, len);
      }
      out.put('\n');
    }
  }

  // Ground truth in the trajectory file format with zero covariance.
  {
    std::ofstream out(dir / "ground_truth.txt");
    if (!out) fail(ErrorCode::io, (dir / "ground_truth.txt").string() + ": cannot open");
    char line[512];
    for (size_t k = 0; k < ds.truth.size(); ++k) {
      const auto& s = ds.truth[k];
      const int len = std::snprintf(
          line, sizeof(line),
          "%zu %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g 0 0 0 0 0 0\n",
          k, s.t, s.position.x(), s.position.y(), s.position.z(),
          s.rotation.w(), s.rotation.x(), s.rotation.y(), s.rotation.z());
      out.write(line, len);
    }
  }

  nlohmann::json manifest{
      {"version", 1},
      {"seed", ds.config.seed},
      {"frame_count", ds.truth.size()},
      {"image_dir", "images"},
      {"controls_file", "controls.txt"},
      {"ground_truth_file", "ground_truth.txt"},
      {"truth_radius_m", ds.truth_radius_m},
      {"config",
       {{"trajectory", to_string(ds.config.trajectory)},
        {"scale_m", ds.config.scale_m},
        {"frames", ds.config.frames},
        {"dt", ds.config.dt},
        {"gyro_noise", ds.config.gyro_noise},
        {"accel_noise", ds.config.accel_noise},
        {"obs_every", ds.config.obs_every},
        {"obs_noise_m", ds.config.obs_noise_m},
        {"image_size", ds.config.image_size},
        {"illumination",
         {{"gain_lo", ds.config.illumination.gain_lo},
          {"gain_hi", ds.config.illumination.gain_hi},
          {"bias_lo", ds.config.illumination.bias_lo},
          {"bias_hi", ds.config.illumination.bias_hi},
          {"gamma_lo", ds.config.illumination.gamma_lo},
          {"gamma_hi", ds.config.illumination.gamma_hi}}},
        {"alias",
         {{"enabled", ds.config.alias.enabled},
          {"source_lo", ds.config.alias.source_lo},
          {"source_hi", ds.config.alias.source_hi},
          {"target_lo", ds.config.alias.target_lo},
          {"target_hi", ds.config.alias.target_hi}}}}}};

  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) fail(ErrorCode::io, manifest_path.string() + ": cannot open");
  out << manifest.dump(2) << "\n";
  if (!out) fail(ErrorCode::io, manifest_path.string() + ": write failed");
  return manifest_path;
}

}  // namespace lcdet
