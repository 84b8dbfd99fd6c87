#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "cvep/preprocess.hpp"
#include "cvep/tdca.hpp"
#include "cvep/types.hpp"

namespace cvep {

// Sub-band weights w_fb(n) = n^-a + b for n = 1..n_bands.
std::vector<double> filterbank_weights(int n_bands, double a, double b);

// Per-class, per-sub-band temporal templates matched against trials.
struct TemplateBank {
  std::vector<std::vector<std::vector<double>>> templates;  // [class][band][time]
  double fs_hz = 250.0;
  int n_shifts = 2;                // N_l, in samples
  std::vector<double> fb_weights;  // one per band
  FilterBankSpec fb;               // bands the templates were filtered with

  int n_classes() const { return static_cast<int>(templates.size()); }
  int n_bands() const { return templates.empty() ? 0 : static_cast<int>(templates.front().size()); }
  int n_samples() const {
    return n_bands() == 0 ? 0 : static_cast<int>(templates.front().front().size());
  }
  void validate() const;
};

// Band-filter broadband per-class signals into a bank.
TemplateBank make_template_bank(const std::vector<std::vector<double>>& signals, double fs_hz,
                                const FilterBankSpec& fb, double fb_a, double fb_b,
                                int n_shifts);

struct DecodeResult {
  int predicted_class = -1;
  int best_shift = 0;                      // positive: the trial lags the template
  Eigen::MatrixXd scores;                  // [n_classes x (2*N_l+1)], shift-major by l = -N_l..N_l
  std::vector<Eigen::MatrixXd> per_band;   // one [n_classes x (2*N_l+1)] per band
};

// Filter-bank, shift-tolerant template matching. The trial is spatially
// filtered, band-filtered, and correlated against each template at shifts
// l in {0, +-1, .., +-N_l}; per-band squared Pearson correlations are
// combined with fb_weights. Shift ties break toward smaller |l|, class
// ties toward the smaller class id. Throws DegenerateCorrelation when a
// trial or template has zero variance.
DecodeResult match(const Eigen::MatrixXd& trial, double fs_hz, const TdcaModel& model,
                   const TemplateBank& bank);

struct BatchDecode {
  std::vector<int> predictions;       // -1 marks a flagged trial
  std::vector<DecodeResult> results;  // empty entry for flagged trials
  std::vector<bool> flagged;
  std::optional<double> accuracy;     // present when the input carries labels
};

// Per-trial match over an EpochSet; per-trial errors flag the trial
// instead of aborting the batch. Trials fan out over n_jobs workers with
// a deterministic, index-ordered reduction.
BatchDecode batch_decode(const EpochSet& epochs, const TdcaModel& model,
                         const TemplateBank& bank, int n_jobs = 1);

struct OnsetScan {
  std::vector<int> shifts_samples;
  std::vector<double> shifts_ms;
  std::vector<double> type1_error;   // one-sided p-value per shift
  int detected_shift_samples = 0;    // argmin of the error curve
  double detected_shift_ms = 0.0;
};

// Asynchronous onset detection: slide the template window over a continuous
// source signal around a nominal onset and test the significance of the top
// class score against the distribution of the others (t fit, df = N_c - 2).
OnsetScan onset_scan(const std::vector<double>& source, double fs_hz,
                     const TemplateBank& bank, int nominal_onset_sample,
                     double scan_min_ms = -100.0, double scan_max_ms = 100.0);

}  // namespace cvep
