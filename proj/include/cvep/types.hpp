#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvep/errors.hpp"

namespace cvep {

// One stimulation code: luminance per display frame, values in [0,1].
struct StimulusSequence {
  int class_id = 0;
  std::vector<double> frames;
  double frame_rate_hz = 60.0;

  void validate() const;
  double duration_s() const { return static_cast<double>(frames.size()) / frame_rate_hz; }
};

enum class CodebookKind { kWhiteNoise, kJfpm };

// Optional speller grid assignment: cell_of_class[class_id] = row-major cell index.
struct GridLayout {
  int rows = 0;
  int cols = 0;
  std::vector<int> cell_of_class;
};

struct Codebook {
  std::vector<StimulusSequence> sequences;
  CodebookKind kind = CodebookKind::kWhiteNoise;
  std::optional<GridLayout> layout;

  int n_classes() const { return static_cast<int>(sequences.size()); }
  int n_frames() const { return sequences.empty() ? 0 : static_cast<int>(sequences.front().frames.size()); }
  double frame_rate_hz() const { return sequences.empty() ? 60.0 : sequences.front().frame_rate_hz; }

  // Throws InvariantViolation: empty, mixed lengths/rates, duplicate or
  // non-contiguous class ids, out-of-range frame values.
  void validate() const;

  // Codebook restricted to the first n sequences (class ids renumbered 0..n-1).
  Codebook prefix(int n) const;
};

// Labeled trials of multichannel EEG at a fixed sampling rate.
// Each trial is [n_channels x n_samples].
struct EpochSet {
  std::vector<Eigen::MatrixXd> trials;
  std::vector<int> labels;
  double fs_hz = 0.0;
  std::vector<std::string> channel_names;

  int n_trials() const { return static_cast<int>(trials.size()); }
  int n_channels() const { return trials.empty() ? 0 : static_cast<int>(trials.front().rows()); }
  int n_samples() const { return trials.empty() ? 0 : static_cast<int>(trials.front().cols()); }

  // Number of distinct classes, assuming labels are 0-based contiguous.
  int n_classes() const;

  void validate() const;

  // Mean over trials carrying the given label. Throws ArgumentError if none.
  Eigen::MatrixXd class_mean(int class_id) const;

  // Mean over all trials.
  Eigen::MatrixXd grand_mean() const;

  // Copy truncated to the first n_keep samples of every trial.
  EpochSet truncated(int n_keep) const;
};

// Tunables shared across the pipeline.
struct RunConfig {
  std::uint64_t seed = 1;
  double fs_hz = 250.0;
  int n_filterbanks = 5;
  double fb_weight_a = 1.25;
  double fb_weight_b = 0.25;
  int n_shifts = 2;
  double tau_min_s = 0.0;
  double tau_max_s = 0.5;
  double svd_alpha = 0.9;
  int n_spatial_components = 1;
  int n_delay_embedding = 0;
  double gaze_shift_s = 0.5;

  void validate() const;
};

}  // namespace cvep
