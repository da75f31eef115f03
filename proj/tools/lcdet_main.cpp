// Command-line front end for the loop-closure detection library. All work
// goes through the C API in lcdet.h.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lcdet.h"

namespace {

struct ConfigDeleter {
  void operator()(lcdet_config* c) const { lcdet_config_free(c); }
};
struct DatasetDeleter {
  void operator()(lcdet_dataset* d) const { lcdet_dataset_free(d); }
};
using ConfigPtr = std::unique_ptr<lcdet_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<lcdet_dataset, DatasetDeleter>;

[[noreturn]] void die(lcdet_status status) {
  std::fprintf(stderr, "error: %s: %s\n", lcdet_status_name(status),
               lcdet_last_error());
  std::exit(1);
}

void check(lcdet_status status) {
  if (status != LCDET_OK) die(status);
}

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string seed;
  std::string threads;
};

ConfigPtr make_config(const GlobalOptions& opts) {
  lcdet_config* raw = nullptr;
  if (!opts.config_path.empty()) {
    check(lcdet_config_load(opts.config_path.c_str(), &raw));
  } else {
    check(lcdet_config_create(&raw));
  }
  ConfigPtr cfg(raw);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n",
                   kv.c_str());
      std::exit(1);
    }
    check(lcdet_config_set(cfg.get(), kv.substr(0, eq).c_str(),
                           kv.substr(eq + 1).c_str()));
  }
  if (!opts.seed.empty()) check(lcdet_config_set(cfg.get(), "seed", opts.seed.c_str()));
  if (!opts.threads.empty()) {
    check(lcdet_config_set(cfg.get(), "threads", opts.threads.c_str()));
  }
  return cfg;
}

DatasetPtr open_dataset(const std::string& manifest) {
  lcdet_dataset* raw = nullptr;
  check(lcdet_dataset_open(manifest.c_str(), &raw));
  return DatasetPtr(raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pose-constrained visual loop-closure detection"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config_path, "config file (key = value)");
  app.add_option("--set", global.overrides,
                 "override a config key (key=value, repeatable)");
  app.add_option("--seed", global.seed, "override the seed");
  app.add_option("--threads", global.threads, "worker thread count");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_out;
  std::string synth_frames;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--frames", synth_frames, "override synth.frames");

  // extract
  auto* extract =
      app.add_subcommand("extract", "extract descriptors into a cache file");
  std::string extract_manifest, extract_cache, extract_ranges;
  extract->add_option("--manifest", extract_manifest, "dataset manifest.json")
      ->required();
  extract->add_option("--cache", extract_cache, "descriptor cache file")
      ->required();
  extract->add_option("--frames", extract_ranges,
                      "frame ranges, e.g. 0-99,200-250 (default: all)");

  // detect
  auto* detect = app.add_subcommand("detect", "run loop-closure detection");
  std::string detect_manifest, detect_out;
  bool detect_baseline = false;
  detect->add_option("--manifest", detect_manifest, "dataset manifest.json")
      ->required();
  detect->add_option("--out", detect_out, "output directory")->required();
  detect->add_flag("--baseline", detect_baseline,
                   "search the whole triangle instead of candidate areas");

  // eval
  auto* eval = app.add_subcommand("eval", "score a detect run");
  std::string eval_manifest, eval_detect_dir, eval_out;
  bool eval_plot = false;
  eval->add_option("--manifest", eval_manifest, "dataset manifest.json")
      ->required();
  eval->add_option("--detect", eval_detect_dir, "detect output directory")
      ->required();
  eval->add_option("--out", eval_out, "output directory")->required();
  eval->add_flag("--plot-data", eval_plot, "also emit plot_data.json");

  // bench
  auto* bench =
      app.add_subcommand("bench", "time constrained and baseline passes");
  std::string bench_manifest, bench_out;
  bench->add_option("--manifest", bench_manifest, "dataset manifest.json")
      ->required();
  bench->add_option("--out", bench_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  auto cfg = make_config(global);

  if (synth->parsed()) {
    if (!synth_frames.empty()) {
      check(lcdet_config_set(cfg.get(), "synth.frames", synth_frames.c_str()));
    }
    char manifest_path[4096];
    check(lcdet_synth_generate(cfg.get(), synth_out.c_str(), manifest_path,
                               sizeof(manifest_path)));
    std::printf("%s\n", manifest_path);
    return 0;
  }
  if (extract->parsed()) {
    auto ds = open_dataset(extract_manifest);
    check(lcdet_extract(ds.get(), cfg.get(), extract_cache.c_str(),
                        extract_ranges.empty() ? nullptr
                                               : extract_ranges.c_str()));
    return 0;
  }
  if (detect->parsed()) {
    auto ds = open_dataset(detect_manifest);
    check(lcdet_detect(ds.get(), cfg.get(), detect_out.c_str(),
                       detect_baseline ? 1 : 0));
    return 0;
  }
  if (eval->parsed()) {
    auto ds = open_dataset(eval_manifest);
    check(lcdet_evaluate(ds.get(), cfg.get(), eval_detect_dir.c_str(),
                         eval_out.c_str(), eval_plot ? 1 : 0));
    return 0;
  }
  if (bench->parsed()) {
    auto ds = open_dataset(bench_manifest);
    check(lcdet_bench(ds.get(), cfg.get(), bench_out.c_str()));
    return 0;
  }
  return 1;
}
