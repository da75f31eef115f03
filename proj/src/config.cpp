#include "lcdet/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "lcdet/error.hpp"

namespace lcdet {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    fail(ErrorCode::config, "bad numeric value '" + v + "' for key " + key);
  }
}

long parse_int(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    fail(ErrorCode::config, "bad integer value '" + v + "' for key " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorCode::config, "bad boolean value '" + v + "' for key " + key);
}

struct KeyDef {
  std::string name;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    std::vector<KeyDef> t;
    auto add = [&t](const char* name,
                    std::function<std::string(const PipelineConfig&)> get,
                    std::function<void(PipelineConfig&, const std::string&)>
                        set) {
      t.push_back({name, std::move(get), std::move(set)});
    };

#define NUM_KEY(NAME, FIELD)                                              \
  add(NAME, [](const PipelineConfig& c) { return fmt_double(c.FIELD); },  \
      [](PipelineConfig& c, const std::string& v) {                       \
        c.FIELD = parse_double(NAME, v);                                  \
      })
#define INT_KEY(NAME, FIELD)                                                  \
  add(NAME,                                                                   \
      [](const PipelineConfig& c) { return std::to_string(c.FIELD); },        \
      [](PipelineConfig& c, const std::string& v) {                           \
        c.FIELD = int(parse_int(NAME, v));                                    \
      })
#define BOOL_KEY(NAME, FIELD)                                                 \
  add(NAME,                                                                   \
      [](const PipelineConfig& c) { return c.FIELD ? "true" : "false"; },     \
      [](PipelineConfig& c, const std::string& v) {                           \
        c.FIELD = parse_bool(NAME, v);                                        \
      })

    INT_KEY("version", version);
    add("seed",
        [](const PipelineConfig& c) { return std::to_string(c.seed); },
        [](PipelineConfig& c, const std::string& v) {
          c.seed = uint64_t(parse_int("seed", v));
          c.synth.seed = c.seed;
        });
    INT_KEY("threads", threads);
    add("margin",
        [](const PipelineConfig& c) { return std::to_string(c.margin); },
        [](PipelineConfig& c, const std::string& v) {
          c.margin = int(parse_int("margin", v));
          c.gate.margin = c.margin;
        });

    NUM_KEY("filter.gyro_noise", filter.gyro_noise);
    NUM_KEY("filter.accel_noise", filter.accel_noise);
    NUM_KEY("filter.obs_noise_m", filter.obs_noise_m);

    NUM_KEY("gate.beta_m", gate.beta);
    BOOL_KEY("gate.use_trace_radius", gate.use_trace_radius);
    INT_KEY("gate.gap_tolerance", gate.gap_tolerance);
    INT_KEY("gate.enlargement", gate.enlargement);
    INT_KEY("gate.max_cluster_span", gate.max_cluster_span);

    INT_KEY("dird.segment_grid", dird.segment_grid);
    INT_KEY("dird.filter_count", dird.filter_count);
    INT_KEY("dird.sample_grid", dird.sample_grid);
    INT_KEY("dird.offset_stride", dird.offset_stride);
    add("dird.quantization",
        [](const PipelineConfig& c) {
          return c.dird.quantization == Quantization::byte
                     ? std::string("byte")
                     : std::string("bit");
        },
        [](PipelineConfig& c, const std::string& v) {
          if (v == "byte") {
            c.dird.quantization = Quantization::byte;
          } else if (v == "bit") {
            c.dird.quantization = Quantization::bit;
          } else {
            fail(ErrorCode::config,
                 "bad value '" + v + "' for key dird.quantization");
          }
        });
    NUM_KEY("dird.logistic_k", dird.logistic_steepness);
    NUM_KEY("dird.logistic_d0", dird.logistic_midpoint);

    NUM_KEY("retrieval.similarity_threshold", retrieval.similarity_threshold);
    INT_KEY("retrieval.sequence_length", retrieval.sequence_length);
    NUM_KEY("retrieval.sequence_sum_threshold",
            retrieval.sequence_sum_threshold);
    INT_KEY("retrieval.nms_window", retrieval.nms_window);

    add("synth.trajectory",
        [](const PipelineConfig& c) { return to_string(c.synth.trajectory); },
        [](PipelineConfig& c, const std::string& v) {
          c.synth.trajectory = trajectory_from_string(v);
        });
    NUM_KEY("synth.scale_m", synth.scale_m);
    INT_KEY("synth.frames", synth.frames);
    NUM_KEY("synth.dt", synth.dt);
    NUM_KEY("synth.gyro_noise", synth.gyro_noise);
    NUM_KEY("synth.accel_noise", synth.accel_noise);
    INT_KEY("synth.obs_every", synth.obs_every);
    NUM_KEY("synth.obs_noise_m", synth.obs_noise_m);
    INT_KEY("synth.image_size", synth.image_size);
    NUM_KEY("synth.illum_gain_lo", synth.illumination.gain_lo);
    NUM_KEY("synth.illum_gain_hi", synth.illumination.gain_hi);
    NUM_KEY("synth.illum_bias_lo", synth.illumination.bias_lo);
    NUM_KEY("synth.illum_bias_hi", synth.illumination.bias_hi);
    NUM_KEY("synth.illum_gamma_lo", synth.illumination.gamma_lo);
    NUM_KEY("synth.illum_gamma_hi", synth.illumination.gamma_hi);
    BOOL_KEY("synth.alias", synth.alias.enabled);
    NUM_KEY("synth.alias_source_lo", synth.alias.source_lo);
    NUM_KEY("synth.alias_source_hi", synth.alias.source_hi);
    NUM_KEY("synth.alias_target_lo", synth.alias.target_lo);
    NUM_KEY("synth.alias_target_hi", synth.alias.target_hi);

    NUM_KEY("eval.truth_radius_m", eval.truth_radius_m);
    INT_KEY("eval.match_tolerance", eval.match_tolerance);
    NUM_KEY("eval.sweep_lo", eval.sweep_lo);
    NUM_KEY("eval.sweep_hi", eval.sweep_hi);
    INT_KEY("eval.sweep_count", eval.sweep_count);

    BOOL_KEY("bench.parallel", bench_parallel);

#undef NUM_KEY
#undef INT_KEY
#undef BOOL_KEY
    return t;
  }();
  return table;
}

const KeyDef* find_key(const std::string& name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

std::vector<double> PipelineConfig::sweep_thresholds() const {
  std::vector<double> out;
  out.reserve(size_t(eval.sweep_count));
  for (int k = 0; k < eval.sweep_count; ++k) {
    const double f =
        eval.sweep_count > 1 ? double(k) / (eval.sweep_count - 1) : 0.0;
    out.push_back(eval.sweep_lo + (eval.sweep_hi - eval.sweep_lo) * f);
  }
  return out;
}

void PipelineConfig::validate() const {
  if (version != 1) {
    fail(ErrorCode::config,
         "unsupported config version " + std::to_string(version));
  }
  if (threads < 1) fail(ErrorCode::config, "threads must be >= 1");
  if (margin < 1) fail(ErrorCode::config, "margin must be >= 1");
  if (filter.gyro_noise < 0 || filter.accel_noise < 0 ||
      filter.obs_noise_m < 0) {
    fail(ErrorCode::config, "filter noise levels must be >= 0");
  }
  if (gate.beta < 0) fail(ErrorCode::config, "gate.beta_m must be >= 0");
  if (gate.gap_tolerance < 0 || gate.enlargement < 0 ||
      gate.max_cluster_span < 1) {
    fail(ErrorCode::config, "gate clustering parameters out of range");
  }
  if (eval.match_tolerance < 0) {
    fail(ErrorCode::config, "eval.match_tolerance must be >= 0");
  }
  if (eval.sweep_count < 1) {
    fail(ErrorCode::config, "eval.sweep_count must be >= 1");
  }
  dird.validate();
  retrieval.validate();
  synth.validate();
}

void config_set(PipelineConfig& cfg, const std::string& key,
                const std::string& value) {
  const KeyDef* def = find_key(key);
  if (!def) fail(ErrorCode::config, "unknown config key '" + key + "'");
  def->set(cfg, value);
}

std::string config_get(const PipelineConfig& cfg, const std::string& key) {
  const KeyDef* def = find_key(key);
  if (!def) fail(ErrorCode::config, "unknown config key '" + key + "'");
  return def->get(cfg);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.name);
  return out;
}

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::config,
           "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    config_set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

PipelineConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  for (const auto& key : config_keys()) {
    out << key << " = " << config_get(cfg, key) << "\n";
  }
  return out.str();
}

}  // namespace lcdet
