#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cvep/types.hpp"

namespace cvep {

// Experiment description: code design, simulated population, and decode
// windows, driven from a single JSON file.
struct PipelineConfig {
  std::string name = "experiment";
  RunConfig run;

  // design
  int calib_classes = 20;
  int test_classes = 40;
  int frames_per_trial = 180;
  int pool_size = 2000;
  int layout_rows = 5;
  int layout_cols = 8;
  std::optional<std::filesystem::path> calib_codebook_path;
  std::optional<std::filesystem::path> test_codebook_path;

  // simulate
  int n_channels = 8;
  int n_source_subjects = 10;
  int calib_trials_per_class = 4;
  double calib_duration_s = 3.0;
  int test_trials_per_class = 1;
  double test_duration_s = 3.0;
  int source_test_trials_per_class = 2;
  double snr_db = 0.0;
  double nonlinearity_gain = 0.1;
  double amplitude_jitter = 0.2;
  double latency_jitter_s = 0.012;
  double pattern_jitter = 0.15;

  // decode
  double linear_window_s = 3.0;
  double transfer_window_s = 3.0;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// FNV-1a of a file's bytes, as a hex string.
std::string file_hash(const std::filesystem::path& path);
std::string string_hash(const std::string& text);

// Execute design -> simulate -> calibrate -> decode -> evaluate, writing
// artifacts and report.json into the workspace. Outputs from an earlier run
// of the same config are reused; a differing config refuses to overwrite
// them unless force is set. Returns a process exit code: 0 success,
// 2 missing input (stage named on stderr), 3 invariant violation.
int run_pipeline(const std::filesystem::path& config_path,
                 const std::filesystem::path& workspace, bool force = false);

struct SweepRow {
  double duration_s = 0.0;   // calibration seconds used
  double accuracy_linear = 0.0;
  double itr_linear = 0.0;
  double accuracy_transfer = 0.0;
  double itr_transfer = 0.0;
};

// Accuracy/ITR of both methods as the calibration budget grows. Trials are
// consumed in repetition-major order (every class once, then again).
std::vector<SweepRow> calibration_sweep(const PipelineConfig& config,
                                        const std::vector<double>& durations_s);

}  // namespace cvep
