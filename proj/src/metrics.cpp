#include "cvep/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "cvep/dsp.hpp"
#include "cvep/errors.hpp"

namespace cvep {

double itr_bpm(int n_targets, double accuracy, double selection_time_s) {
  if (n_targets < 2) throw ArgumentError("ITR needs at least two targets");
  if (accuracy < 0.0 || accuracy > 1.0) throw ArgumentError("accuracy must lie in [0,1]");
  if (!(selection_time_s > 0.0)) throw ArgumentError("selection time must be positive");

  const double m = static_cast<double>(n_targets);
  double bits = std::log2(m);
  if (accuracy > 0.0) bits += accuracy * std::log2(accuracy);
  if (accuracy < 1.0) bits += (1.0 - accuracy) * std::log2((1.0 - accuracy) / (m - 1.0));
  return bits * 60.0 / selection_time_s;
}

SnrReport snr_spectrum(const EpochSet& sources, double upper_limit_hz) {
  sources.validate();
  if (sources.n_channels() != 1)
    throw ArgumentError("expected single-component source epochs");
  const int n_tr = sources.n_trials();
  if (n_tr < 2) throw NoNoiseEstimate("noise spectrum needs at least two trials");
  const int ns = sources.n_samples();
  const double fs = sources.fs_hz;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(ns);
  for (const auto& t : sources.trials) mean += t.row(0).transpose();
  mean /= static_cast<double>(n_tr);

  std::vector<double> mean_v(mean.data(), mean.data() + ns);
  const auto signal = dsp::periodogram(mean_v, fs);

  SnrReport report;
  report.freqs_hz = signal.freqs_hz;
  report.signal_psd = signal.power;
  report.noise_psd.assign(signal.power.size(), 0.0);

  std::vector<double> noise_sum(signal.power.size(), 0.0);
  for (const auto& t : sources.trials) {
    std::vector<double> residual(ns);
    for (int i = 0; i < ns; ++i) residual[i] = t(0, i) - mean(i);
    const auto psd = dsp::periodogram(residual, fs);
    for (size_t k = 0; k < psd.power.size(); ++k) noise_sum[k] += psd.power[k];
  }
  for (size_t k = 0; k < noise_sum.size(); ++k)
    report.noise_psd[k] = noise_sum[k] / static_cast<double>(n_tr);

  report.snr.resize(signal.power.size());
  bool any_infinite = false;
  for (size_t k = 0; k < signal.power.size(); ++k) {
    if (noise_sum[k] > 0.0) {
      report.snr[k] = signal.power[k] / noise_sum[k];
    } else if (signal.power[k] > 0.0) {
      report.snr[k] = std::numeric_limits<double>::infinity();
      any_infinite = true;
    } else {
      report.snr[k] = 0.0;
    }
  }
  report.infinite_snr = any_infinite;

  report.upper_limit_hz = upper_limit_hz > 0.0 ? upper_limit_hz : fs / 2.0;
  report.mutual_info_bits_per_s = mutual_information(report, report.upper_limit_hz);
  return report;
}

double mutual_information(const SnrReport& report, double k_hz) {
  if (report.freqs_hz.empty()) throw ArgumentError("empty SNR report");
  if (k_hz > report.freqs_hz.back() + 1e-9)
    throw ArgumentError("upper limit exceeds the spectral range");

  auto integrand = [&](size_t i) { return std::log2(1.0 + report.snr[i]); };

  double total = 0.0;
  for (size_t i = 0; i + 1 < report.freqs_hz.size(); ++i) {
    const double f0 = report.freqs_hz[i];
    const double f1 = report.freqs_hz[i + 1];
    if (f0 >= k_hz) break;
    const double g0 = integrand(i);
    const double g1 = integrand(i + 1);
    if (std::isinf(g0) || std::isinf(g1)) return std::numeric_limits<double>::infinity();
    if (f1 <= k_hz) {
      total += 0.5 * (g0 + g1) * (f1 - f0);
    } else {
      // Partial interval: integrate up to k with the interpolated value.
      const double frac = (k_hz - f0) / (f1 - f0);
      const double gk = g0 + frac * (g1 - g0);
      total += 0.5 * (g0 + gk) * (k_hz - f0);
    }
  }
  return total;
}

std::vector<SweepPoint> large_target_sweep(const EpochSet& responses, const TdcaModel& model,
                                           const Trf& trf, const Codebook& pool,
                                           const std::vector<int>& n_list,
                                           const FilterBankSpec& fb, double fb_a, double fb_b,
                                           int n_shifts, double selection_time_s) {
  responses.validate();
  if (n_list.empty()) throw ArgumentError("empty sweep list");
  const int n_min = *std::min_element(n_list.begin(), n_list.end());
  const int n_max = *std::max_element(n_list.begin(), n_list.end());
  if (n_max > pool.n_classes()) throw ArgumentError("sweep size exceeds the pool");
  for (int l : responses.labels)
    if (l >= n_min) throw ArgumentError("true codes must lie in the pool prefix");

  const double duration_s = responses.n_samples() / responses.fs_hz;
  std::vector<SweepPoint> out;
  out.reserve(n_list.size());
  for (int n : n_list) {
    const Codebook subset = pool.prefix(n);
    const TemplateBank bank = build_linear_templates(trf, subset, responses.fs_hz, duration_s,
                                                     fb, fb_a, fb_b, n_shifts);
    const auto start = std::chrono::steady_clock::now();
    const auto batch = batch_decode(responses, model, bank);
    const auto stop = std::chrono::steady_clock::now();

    SweepPoint pt;
    pt.n_targets = n;
    pt.accuracy = batch.accuracy.value_or(0.0);
    pt.itr = itr_bpm(n, pt.accuracy, selection_time_s);
    pt.decode_seconds = std::chrono::duration<double>(stop - start).count();
    out.push_back(pt);
  }
  return out;
}

std::pair<Eigen::MatrixXd, double> confusion_and_accuracy(const std::vector<int>& labels,
                                                          const std::vector<int>& predictions,
                                                          bool row_normalize) {
  if (labels.size() != predictions.size()) throw ArgumentError("length mismatch");
  if (labels.empty()) throw ArgumentError("empty input");
  int n_cls = 0;
  for (int l : labels) n_cls = std::max(n_cls, l + 1);
  for (int p : predictions) n_cls = std::max(n_cls, p + 1);

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_cls, n_cls);
  int hits = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] >= 0) m(labels[i], predictions[i]) += 1.0;
    if (labels[i] == predictions[i]) ++hits;
  }
  if (row_normalize) {
    for (int r = 0; r < n_cls; ++r) {
      const double s = m.row(r).sum();
      if (s > 0.0) m.row(r) /= s;
    }
  }
  return {m, static_cast<double>(hits) / static_cast<double>(labels.size())};
}

}  // namespace cvep
