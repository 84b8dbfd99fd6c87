#include "cvep/preprocess.hpp"

#include <cmath>

#include "cvep/errors.hpp"

namespace cvep {

namespace {

// Apply a filter to every channel of every trial.
EpochSet apply_rows(const EpochSet& in, const dsp::SosFilter& f, bool zero_phase) {
  EpochSet out = in;
  for (auto& trial : out.trials) {
    for (int c = 0; c < trial.rows(); ++c) {
      std::vector<double> row(trial.cols());
      for (int t = 0; t < trial.cols(); ++t) row[t] = trial(c, t);
      const auto filtered = zero_phase ? dsp::filtfilt(f, row) : dsp::sos_filter(f, row);
      for (int t = 0; t < trial.cols(); ++t) trial(c, t) = filtered[t];
    }
  }
  return out;
}

}  // namespace

void FilterBankSpec::validate(double fs_hz) const {
  if (n_bands != static_cast<int>(band_edges.size()))
    throw InvariantViolation("n_bands must equal the number of band edges");
  if (n_bands < 1) throw InvariantViolation("need at least one band");
  for (const auto& [lo, hi] : band_edges) {
    if (!(0.0 < lo && lo < hi && hi < fs_hz / 2.0))
      throw ArgumentError("band edges must satisfy 0 < low < high < fs/2");
  }
}

FilterBankSpec default_filterbank(int n_bands, double fs_hz) {
  FilterBankSpec spec;
  spec.n_bands = n_bands;
  const double high = std::min(90.0, 0.45 * fs_hz);
  for (int n = 1; n <= n_bands; ++n) spec.band_edges.emplace_back(8.0 * n, high);
  spec.validate(fs_hz);
  return spec;
}

EpochSet downsample(const EpochSet& in, double factor) {
  if (factor < 1.0 || factor != std::floor(factor))
    throw ArgumentError("downsample factor must be a positive integer");
  const int k = static_cast<int>(factor);
  if (k == 1) return in;
  if (std::fmod(in.fs_hz, factor) != 0.0)
    throw ArgumentError("sampling rate must be divisible by the factor");

  const double new_fs = in.fs_hz / k;
  const auto lp = dsp::butterworth_lowpass(8, 0.4 * (new_fs / 2.0), in.fs_hz);
  EpochSet filtered = apply_rows(in, lp, true);

  EpochSet out;
  out.labels = in.labels;
  out.channel_names = in.channel_names;
  out.fs_hz = new_fs;
  const int n_keep = (in.n_samples() + k - 1) / k;
  for (const auto& trial : filtered.trials) {
    Eigen::MatrixXd dec(trial.rows(), n_keep);
    for (int t = 0; t < n_keep; ++t) dec.col(t) = trial.col(t * k);
    out.trials.push_back(std::move(dec));
  }
  return out;
}

EpochSet notch_50hz(const EpochSet& in) {
  if (!(in.fs_hz > 100.0)) throw ArgumentError("notch requires fs above 100 Hz");
  return apply_rows(in, dsp::iir_notch(50.0, 35.0, in.fs_hz), true);
}

std::vector<EpochSet> filterbank(const EpochSet& in, const FilterBankSpec& spec) {
  spec.validate(in.fs_hz);
  std::vector<EpochSet> bands;
  bands.reserve(spec.band_edges.size());
  for (const auto& [lo, hi] : spec.band_edges) {
    const auto bp = dsp::butterworth_bandpass(spec.filter_order, lo, hi, in.fs_hz);
    bands.push_back(apply_rows(in, bp, spec.zero_phase));
  }
  return bands;
}

std::vector<double> bandpass(const std::vector<double>& x, double low_hz, double high_hz,
                             int order, double fs_hz) {
  return dsp::filtfilt(dsp::butterworth_bandpass(order, low_hz, high_hz, fs_hz), x);
}

std::vector<double> frames_to_samples(const StimulusSequence& seq, double fs_hz,
                                      int n_samples, bool* padded) {
  if (!(fs_hz >= seq.frame_rate_hz)) throw ArgumentError("fs must be at least the frame rate");
  if (n_samples < 1) throw ArgumentError("need at least one output sample");
  std::vector<double> out(static_cast<size_t>(n_samples), 0.0);
  bool any_pad = false;
  const auto n_frames = static_cast<long>(seq.frames.size());
  for (int t = 0; t < n_samples; ++t) {
    const double time_s = static_cast<double>(t) / fs_hz;
    const auto frame = static_cast<long>(std::floor(time_s * seq.frame_rate_hz));
    if (frame < n_frames) {
      out[t] = seq.frames[frame];
    } else {
      any_pad = true;
    }
  }
  if (padded) *padded = any_pad;
  return out;
}

}  // namespace cvep
