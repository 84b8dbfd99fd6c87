#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "cvep/decoder.hpp"
#include "cvep/trf.hpp"
#include "cvep/types.hpp"

namespace cvep {

// Information transfer rate in bits per minute for an M-target selection
// with accuracy p and selection time t_s seconds (gaze shift included).
double itr_bpm(int n_targets, double accuracy, double selection_time_s);

// Spectral SNR of one class of filtered source trials: the trial mean is
// the signal, per-trial residuals are the noise.
struct SnrReport {
  std::vector<double> freqs_hz;
  std::vector<double> snr;         // |mean(f)|^2 / sum_i |noise_i(f)|^2
  std::vector<double> signal_psd;  // Parseval-normalized
  std::vector<double> noise_psd;   // mean over trials, Parseval-normalized
  double mutual_info_bits_per_s = 0.0;
  double upper_limit_hz = 0.0;
  bool infinite_snr = false;  // degenerate noiseless input
};

SnrReport snr_spectrum(const EpochSet& one_class_sources, double upper_limit_hz = -1.0);

// Trapezoidal integral of log2(1 + SNR(f)) from 0 to k_hz.
double mutual_information(const SnrReport& report, double k_hz);

struct SweepPoint {
  int n_targets = 0;
  double accuracy = 0.0;
  double itr = 0.0;
  double decode_seconds = 0.0;
};

// Decode the same responses against template banks built from growing
// prefixes of the pool. Labels must index the pool prefix.
std::vector<SweepPoint> large_target_sweep(const EpochSet& responses, const TdcaModel& model,
                                           const Trf& trf, const Codebook& pool,
                                           const std::vector<int>& n_list,
                                           const FilterBankSpec& fb, double fb_a, double fb_b,
                                           int n_shifts, double selection_time_s);

// Confusion counts (rows = labels, cols = predictions) and trace accuracy.
std::pair<Eigen::MatrixXd, double> confusion_and_accuracy(const std::vector<int>& labels,
                                                          const std::vector<int>& predictions,
                                                          bool row_normalize = false);

}  // namespace cvep
