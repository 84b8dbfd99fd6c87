#pragma once

#include <utility>
#include <vector>

#include "cvep/dsp.hpp"
#include "cvep/types.hpp"

namespace cvep {

struct FilterBankSpec {
  int n_bands = 1;
  std::vector<std::pair<double, double>> band_edges;  // (low_hz, high_hz)
  int filter_order = 4;
  bool zero_phase = true;

  void validate(double fs_hz) const;
};

// Sub-bands (8n, 90) Hz as used with broadband codes; capped below Nyquist.
FilterBankSpec default_filterbank(int n_bands, double fs_hz);

// Anti-alias low-pass (8th-order Butterworth at 0.4 of the new Nyquist,
// zero-phase) followed by decimation. factor == 1 returns the input.
EpochSet downsample(const EpochSet& in, double factor);

// Second-order 50 Hz notch, Q = 35, applied forward-backward.
EpochSet notch_50hz(const EpochSet& in);

// Zero-phase Butterworth band-pass per band; one EpochSet per band.
std::vector<EpochSet> filterbank(const EpochSet& in, const FilterBankSpec& spec);

// Single band applied to a raw signal vector.
std::vector<double> bandpass(const std::vector<double>& x, double low_hz, double high_hz,
                             int order, double fs_hz);

// Zero-order hold resampling of a display-rate code to the EEG rate.
// Sample t carries the value of frame floor(t * frame_rate). Samples past
// the end of the stimulus are zero-padded; *padded reports whether any were.
std::vector<double> frames_to_samples(const StimulusSequence& seq, double fs_hz,
                                      int n_samples, bool* padded = nullptr);

}  // namespace cvep
