/* lcdet — pose-constrained visual loop-closure detection.
 *
 * C API over the detection pipeline: synthetic dataset generation, descriptor
 * extraction, pose-gated loop detection and evaluation. All functions return
 * a status code; lcdet_last_error() carries the detail message of the most
 * recent failure on the calling thread. Handles are opaque and must be
 * released with their matching *_free function.
 *
 * Thread safety: a handle may only be used by one thread at a time; distinct
 * handles are independent. Internal parallelism is controlled by the
 * `threads` config key.
 */
#ifndef LCDET_H
#define LCDET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lcdet_status {
  LCDET_OK = 0,
  LCDET_ERROR_INVALID_ARGUMENT = 1,
  LCDET_ERROR_CONFIG = 2,
  LCDET_ERROR_IO = 3,
  LCDET_ERROR_NUMERIC = 4,
  LCDET_ERROR_STATE = 5,
  LCDET_ERROR_BUFFER_TOO_SMALL = 6,
  LCDET_ERROR_UNKNOWN = 7
} lcdet_status;

typedef struct lcdet_config lcdet_config;
typedef struct lcdet_dataset lcdet_dataset;

const char* lcdet_version(void);

/* Static name of a status code, e.g. "LCDET_ERROR_IO". */
const char* lcdet_status_name(lcdet_status status);

/* Detail message of the last failure on this thread; empty string if none. */
const char* lcdet_last_error(void);

/* ---- configuration ----------------------------------------------------- */

/* New configuration with every key at its default. */
lcdet_status lcdet_config_create(lcdet_config** out);

/* Parse a `key = value` config file. Unknown keys are rejected. */
lcdet_status lcdet_config_load(const char* path, lcdet_config** out);

lcdet_status lcdet_config_set(lcdet_config* cfg, const char* key,
                              const char* value);

/* Copies the value into `buf` (NUL terminated). */
lcdet_status lcdet_config_get(const lcdet_config* cfg, const char* key,
                              char* buf, size_t buf_size);

/* Write the config with all defaults materialized. */
lcdet_status lcdet_config_save(const lcdet_config* cfg, const char* path);

void lcdet_config_free(lcdet_config* cfg);

/* ---- datasets ----------------------------------------------------------- */

/* Generate a synthetic dataset under `out_dir` (images, controls, ground
 * truth, manifest.json) from the synth.* config keys. The manifest path is
 * copied into `manifest_path`. */
lcdet_status lcdet_synth_generate(const lcdet_config* cfg, const char* out_dir,
                                  char* manifest_path,
                                  size_t manifest_path_size);

lcdet_status lcdet_dataset_open(const char* manifest_path, lcdet_dataset** out);

/* Directory of ordered grayscale images plus a pose file with one 3x4
 * row-major pose per line. */
lcdet_status lcdet_dataset_open_kitti(const char* image_dir,
                                      const char* pose_file,
                                      lcdet_dataset** out);

lcdet_status lcdet_dataset_frame_count(const lcdet_dataset* ds, uint32_t* out);

void lcdet_dataset_free(lcdet_dataset* ds);

/* ---- pipeline ----------------------------------------------------------- */

/* Extract descriptors for `ranges` ("0-99,200-250"; NULL or "" = all frames)
 * into the cache file, creating or extending it. Idempotent per frame. */
lcdet_status lcdet_extract(lcdet_dataset* ds, const lcdet_config* cfg,
                           const char* cache_path, const char* ranges);

/* Run detection and write trajectory.txt, prelim.csv, areas.csv,
 * similarity.csv, loops.csv, timing.csv and descriptors.cache into
 * `out_dir`. Nonzero `baseline` searches the whole triangle instead of the
 * pose-gated candidate areas. */
lcdet_status lcdet_detect(lcdet_dataset* ds, const lcdet_config* cfg,
                          const char* out_dir, int baseline);

/* Score a detect run against ground truth: writes pr.csv and summary.json
 * (and plot_data.json when `plot_data` is nonzero) into `out_dir`. */
lcdet_status lcdet_evaluate(lcdet_dataset* ds, const lcdet_config* cfg,
                            const char* detect_dir, const char* out_dir,
                            int plot_data);

/* Constrained + baseline passes with per-stage timings; writes timing.csv,
 * loops_constrained.csv and loops_baseline.csv into `out_dir`. */
lcdet_status lcdet_bench(lcdet_dataset* ds, const lcdet_config* cfg,
                         const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* LCDET_H */
