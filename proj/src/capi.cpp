#include "lcdet.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "lcdet/config.hpp"
#include "lcdet/dataset.hpp"
#include "lcdet/error.hpp"
#include "lcdet/pipeline.hpp"
#include "lcdet/synth.hpp"

struct lcdet_config {
  lcdet::PipelineConfig cfg;
};

struct lcdet_dataset {
  lcdet::DatasetManifest manifest;
  std::unique_ptr<lcdet::FrameSource> frames;
};

namespace {

thread_local std::string g_last_error;

lcdet_status to_status(lcdet::ErrorCode code) {
  using lcdet::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return LCDET_ERROR_INVALID_ARGUMENT;
    case ErrorCode::config: return LCDET_ERROR_CONFIG;
    case ErrorCode::io: return LCDET_ERROR_IO;
    case ErrorCode::numeric: return LCDET_ERROR_NUMERIC;
    case ErrorCode::state: return LCDET_ERROR_STATE;
  }
  return LCDET_ERROR_UNKNOWN;
}

template <typename Fn>
lcdet_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LCDET_OK;
  } catch (const lcdet::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LCDET_ERROR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown error";
    return LCDET_ERROR_UNKNOWN;
  }
}

lcdet_status require(bool ok, const char* message) {
  if (ok) return LCDET_OK;
  g_last_error = message;
  return LCDET_ERROR_INVALID_ARGUMENT;
}

lcdet_status copy_out(const std::string& value, char* buf, size_t buf_size) {
  if (!buf || buf_size < value.size() + 1) {
    g_last_error = "buffer too small: need " +
                   std::to_string(value.size() + 1) + " bytes";
    return LCDET_ERROR_BUFFER_TOO_SMALL;
  }
  std::memcpy(buf, value.c_str(), value.size() + 1);
  return LCDET_OK;
}

}  // namespace

extern "C" {

const char* lcdet_version(void) { return "0.1.0"; }

const char* lcdet_status_name(lcdet_status status) {
  switch (status) {
    case LCDET_OK: return "LCDET_OK";
    case LCDET_ERROR_INVALID_ARGUMENT: return "LCDET_ERROR_INVALID_ARGUMENT";
    case LCDET_ERROR_CONFIG: return "LCDET_ERROR_CONFIG";
    case LCDET_ERROR_IO: return "LCDET_ERROR_IO";
    case LCDET_ERROR_NUMERIC: return "LCDET_ERROR_NUMERIC";
    case LCDET_ERROR_STATE: return "LCDET_ERROR_STATE";
    case LCDET_ERROR_BUFFER_TOO_SMALL: return "LCDET_ERROR_BUFFER_TOO_SMALL";
    case LCDET_ERROR_UNKNOWN: return "LCDET_ERROR_UNKNOWN";
  }
  return "LCDET_ERROR_UNKNOWN";
}

const char* lcdet_last_error(void) { return g_last_error.c_str(); }

lcdet_status lcdet_config_create(lcdet_config** out) {
  if (auto s = require(out != nullptr, "out must not be null")) return s;
  return guarded([&] { *out = new lcdet_config(); });
}

lcdet_status lcdet_config_load(const char* path, lcdet_config** out) {
  if (auto s = require(path && out, "path and out must not be null")) return s;
  return guarded([&] {
    auto cfg = std::make_unique<lcdet_config>();
    cfg->cfg = lcdet::parse_config_file(path);
    *out = cfg.release();
  });
}

lcdet_status lcdet_config_set(lcdet_config* cfg, const char* key,
                              const char* value) {
  if (auto s = require(cfg && key && value,
                       "cfg, key and value must not be null")) {
    return s;
  }
  return guarded([&] { lcdet::config_set(cfg->cfg, key, value); });
}

lcdet_status lcdet_config_get(const lcdet_config* cfg, const char* key,
                              char* buf, size_t buf_size) {
  if (auto s = require(cfg && key, "cfg and key must not be null")) return s;
  std::string value;
  if (auto s = guarded([&] { value = lcdet::config_get(cfg->cfg, key); })) {
    return s;
  }
  return copy_out(value, buf, buf_size);
}

lcdet_status lcdet_config_save(const lcdet_config* cfg, const char* path) {
  if (auto s = require(cfg && path, "cfg and path must not be null")) return s;
  return guarded([&] {
    std::ofstream out(path);
    if (!out) {
      lcdet::fail(lcdet::ErrorCode::io,
                  std::string(path) + ": cannot open for writing");
    }
    out << lcdet::serialize_config(cfg->cfg);
    if (!out) lcdet::fail(lcdet::ErrorCode::io, std::string(path) + ": write failed");
  });
}

void lcdet_config_free(lcdet_config* cfg) { delete cfg; }

lcdet_status lcdet_synth_generate(const lcdet_config* cfg, const char* out_dir,
                                  char* manifest_path,
                                  size_t manifest_path_size) {
  if (auto s = require(cfg && out_dir, "cfg and out_dir must not be null")) {
    return s;
  }
  std::string path;
  if (auto s = guarded([&] {
        cfg->cfg.validate();
        lcdet::SynthConfig synth = cfg->cfg.synth;
        synth.seed = cfg->cfg.seed;
        const auto ds = lcdet::generate_dataset(synth);
        path = lcdet::write_dataset(ds, out_dir).string();
      })) {
    return s;
  }
  if (manifest_path) return copy_out(path, manifest_path, manifest_path_size);
  return LCDET_OK;
}

lcdet_status lcdet_dataset_open(const char* manifest_path,
                                lcdet_dataset** out) {
  if (auto s = require(manifest_path && out,
                       "manifest_path and out must not be null")) {
    return s;
  }
  return guarded([&] {
    auto ds = std::make_unique<lcdet_dataset>();
    ds->manifest = lcdet::load_manifest(manifest_path);
    ds->frames = lcdet::make_disk_frames(ds->manifest);
    *out = ds.release();
  });
}

lcdet_status lcdet_dataset_open_kitti(const char* image_dir,
                                      const char* pose_file,
                                      lcdet_dataset** out) {
  if (auto s = require(image_dir && pose_file && out,
                       "image_dir, pose_file and out must not be null")) {
    return s;
  }
  return guarded([&] {
    auto ds = std::make_unique<lcdet_dataset>();
    ds->manifest = lcdet::load_kitti_style(image_dir, pose_file);
    ds->frames = lcdet::make_disk_frames(ds->manifest);
    *out = ds.release();
  });
}

lcdet_status lcdet_dataset_frame_count(const lcdet_dataset* ds, uint32_t* out) {
  if (auto s = require(ds && out, "ds and out must not be null")) return s;
  *out = ds->manifest.frame_count;
  return LCDET_OK;
}

void lcdet_dataset_free(lcdet_dataset* ds) { delete ds; }

lcdet_status lcdet_extract(lcdet_dataset* ds, const lcdet_config* cfg,
                           const char* cache_path, const char* ranges) {
  if (auto s = require(ds && cfg && cache_path,
                       "ds, cfg and cache_path must not be null")) {
    return s;
  }
  return guarded([&] {
    lcdet::run_extract(ds->manifest, *ds->frames, cfg->cfg, cache_path,
                       ranges ? ranges : "");
  });
}

lcdet_status lcdet_detect(lcdet_dataset* ds, const lcdet_config* cfg,
                          const char* out_dir, int baseline) {
  if (auto s = require(ds && cfg && out_dir,
                       "ds, cfg and out_dir must not be null")) {
    return s;
  }
  return guarded([&] {
    lcdet::DescriptorCache cache(uint32_t(cfg->cfg.dird.dimension()),
                                 cfg->cfg.dird.quantization);
    const auto result = lcdet::run_detect(ds->manifest, *ds->frames, cfg->cfg,
                                          baseline != 0, &cache);
    lcdet::write_detect_outputs(result, cache, out_dir);
  });
}

lcdet_status lcdet_evaluate(lcdet_dataset* ds, const lcdet_config* cfg,
                            const char* detect_dir, const char* out_dir,
                            int plot_data) {
  if (auto s = require(ds && cfg && detect_dir && out_dir,
                       "ds, cfg, detect_dir and out_dir must not be null")) {
    return s;
  }
  return guarded([&] {
    lcdet::run_eval(ds->manifest, *ds->frames, cfg->cfg, detect_dir, out_dir,
                    plot_data != 0);
  });
}

lcdet_status lcdet_bench(lcdet_dataset* ds, const lcdet_config* cfg,
                         const char* out_dir) {
  if (auto s = require(ds && cfg && out_dir,
                       "ds, cfg and out_dir must not be null")) {
    return s;
  }
  return guarded([&] {
    lcdet::run_bench(ds->manifest, *ds->frames, cfg->cfg, out_dir);
  });
}

}  // extern "C"
