#include "cvep/decoder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "cvep/dsp.hpp"
#include "cvep/errors.hpp"

namespace cvep {

std::vector<double> filterbank_weights(int n_bands, double a, double b) {
  if (n_bands < 1) throw ArgumentError("need at least one band");
  std::vector<double> w(n_bands);
  for (int n = 1; n <= n_bands; ++n) {
    w[n - 1] = std::pow(static_cast<double>(n), -a) + b;
    if (!(w[n - 1] > 0.0)) throw InvariantViolation("filter bank weights must be positive");
  }
  return w;
}

void TemplateBank::validate() const {
  if (templates.empty()) throw InvariantViolation("template bank is empty");
  const size_t bands = templates.front().size();
  const size_t len = templates.front().empty() ? 0 : templates.front().front().size();
  if (bands == 0 || len == 0) throw InvariantViolation("template bank has empty templates");
  for (const auto& cls : templates) {
    if (cls.size() != bands) throw InvariantViolation("ragged band count in template bank");
    for (const auto& t : cls)
      if (t.size() != len) throw InvariantViolation("ragged template lengths");
  }
  if (fb_weights.size() != bands) throw InvariantViolation("one weight per band required");
  if (n_shifts < 0) throw InvariantViolation("shift budget must be non-negative");
}

TemplateBank make_template_bank(const std::vector<std::vector<double>>& signals, double fs_hz,
                                const FilterBankSpec& fb, double fb_a, double fb_b,
                                int n_shifts) {
  fb.validate(fs_hz);
  TemplateBank bank;
  bank.fs_hz = fs_hz;
  bank.n_shifts = n_shifts;
  bank.fb = fb;
  bank.fb_weights = filterbank_weights(fb.n_bands, fb_a, fb_b);
  bank.templates.resize(signals.size());
  for (size_t k = 0; k < signals.size(); ++k) {
    bank.templates[k].reserve(fb.n_bands);
    for (const auto& [lo, hi] : fb.band_edges) {
      const auto filt = dsp::butterworth_bandpass(fb.filter_order, lo, hi, fs_hz);
      bank.templates[k].push_back(fb.zero_phase ? dsp::filtfilt(filt, signals[k])
                                                : dsp::sos_filter(filt, signals[k]));
    }
  }
  bank.validate();
  return bank;
}

namespace {

// Pearson correlation between trial window and template shifted by l.
// Positive l compares trial[l..] against template[0..], i.e. a lagging trial.
double shifted_pearson(const std::vector<double>& trial, const std::vector<double>& tmpl, int l) {
  const int ls = static_cast<int>(trial.size());
  const int lt = static_cast<int>(tmpl.size());
  const int xs = std::max(l, 0);
  const int ys = std::max(-l, 0);
  const int len = std::min(ls - xs, lt - ys);
  if (len < 2) throw ArgumentError("trial too short for the requested shift");
  return dsp::pearson(std::span<const double>(trial.data() + xs, len),
                      std::span<const double>(tmpl.data() + ys, len));
}

std::vector<int> shift_order(int n_shifts) {
  // 0, -1, +1, -2, +2, ... so strict improvement favors smaller |l|.
  std::vector<int> order{0};
  for (int l = 1; l <= n_shifts; ++l) {
    order.push_back(-l);
    order.push_back(l);
  }
  return order;
}

}  // namespace

DecodeResult match(const Eigen::MatrixXd& trial, double fs_hz, const TdcaModel& model,
                   const TemplateBank& bank) {
  bank.validate();
  if (trial.rows() != model.n_channels())
    throw ArgumentError("trial channel count does not match the model");
  const int n_cls = bank.n_classes();
  const int n_bands = bank.n_bands();
  const int n_shift = bank.n_shifts;
  if (trial.cols() < bank.n_samples() - n_shift)
    throw ArgumentError("trial shorter than template minus shift budget");

  // Sources, then band decomposition of each component.
  const Eigen::MatrixXd sources = model.filters.transpose() * trial;
  const int n_comp = static_cast<int>(sources.rows());
  std::vector<std::vector<std::vector<double>>> banded(n_bands);  // [band][comp][time]
  for (int bd = 0; bd < n_bands; ++bd) {
    const auto [lo, hi] = bank.fb.band_edges[bd];
    const auto filt = dsp::butterworth_bandpass(bank.fb.filter_order, lo, hi, fs_hz);
    banded[bd].resize(n_comp);
    for (int c = 0; c < n_comp; ++c) {
      std::vector<double> row(sources.cols());
      for (int t = 0; t < sources.cols(); ++t) row[t] = sources(c, t);
      banded[bd][c] = bank.fb.zero_phase ? dsp::filtfilt(filt, row) : dsp::sos_filter(filt, row);
    }
  }

  const auto shifts = shift_order(n_shift);
  const int n_l = 2 * n_shift + 1;
  DecodeResult res;
  res.scores = Eigen::MatrixXd::Zero(n_cls, n_l);
  res.per_band.assign(n_bands, Eigen::MatrixXd::Zero(n_cls, n_l));

  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_cls; ++i) {
    for (int si = 0; si < n_l; ++si) {
      const int l = shifts[si];
      const int col = l + n_shift;  // storage by l = -N_l..N_l
      double combined = 0.0;
      for (int bd = 0; bd < n_bands; ++bd) {
        double sq = 0.0;
        for (int c = 0; c < n_comp; ++c) {
          const double rho = shifted_pearson(banded[bd][c], bank.templates[i][bd], l);
          if (std::isnan(rho))
            throw DegenerateCorrelation("zero-variance trial or template");
          sq += rho * rho;
        }
        res.per_band[bd](i, col) = sq;
        combined += bank.fb_weights[bd] * sq;
      }
      res.scores(i, col) = combined;
      if (combined > best) {
        best = combined;
        res.predicted_class = i;
        res.best_shift = l;
      }
    }
  }
  return res;
}

BatchDecode batch_decode(const EpochSet& epochs, const TdcaModel& model,
                         const TemplateBank& bank, int n_jobs) {
  BatchDecode out;
  const int n = epochs.n_trials();
  out.predictions.assign(n, -1);
  out.results.resize(n);
  out.flagged.assign(n, false);

  auto decode_one = [&](int i) {
    try {
      out.results[i] = match(epochs.trials[i], epochs.fs_hz, model, bank);
      out.predictions[i] = out.results[i].predicted_class;
    } catch (const DegenerateCorrelation&) {
      out.flagged[i] = true;
    }
  };

  n_jobs = std::max(1, std::min(n_jobs, n == 0 ? 1 : n));
  if (n_jobs == 1) {
    for (int i = 0; i < n; ++i) decode_one(i);
  } else {
    std::vector<std::thread> workers;
    std::atomic<int> next{0};
    for (int w = 0; w < n_jobs; ++w)
      workers.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) decode_one(i);
      });
    for (auto& t : workers) t.join();
  }

  if (!epochs.labels.empty() && epochs.n_trials() > 0) {
    int hits = 0;
    for (int i = 0; i < epochs.n_trials(); ++i)
      if (out.predictions[i] == epochs.labels[i]) ++hits;
    out.accuracy = static_cast<double>(hits) / epochs.n_trials();
  }
  return out;
}

OnsetScan onset_scan(const std::vector<double>& source, double fs_hz,
                     const TemplateBank& bank, int nominal_onset_sample,
                     double scan_min_ms, double scan_max_ms) {
  bank.validate();
  const int n_cls = bank.n_classes();
  if (n_cls < 3) throw InsufficientClasses("onset scan needs at least three classes");
  const int len = bank.n_samples();
  const int lo = static_cast<int>(std::floor(scan_min_ms / 1000.0 * fs_hz));
  const int hi = static_cast<int>(std::ceil(scan_max_ms / 1000.0 * fs_hz));
  if (nominal_onset_sample + lo < 0 ||
      nominal_onset_sample + hi + len > static_cast<int>(source.size()))
    throw ArgumentError("source shorter than template plus scan range");

  // Band-filter the continuous source once per band.
  std::vector<std::vector<double>> banded(bank.n_bands());
  for (int bd = 0; bd < bank.n_bands(); ++bd) {
    const auto [flo, fhi] = bank.fb.band_edges[bd];
    const auto filt = dsp::butterworth_bandpass(bank.fb.filter_order, flo, fhi, fs_hz);
    banded[bd] = bank.fb.zero_phase ? dsp::filtfilt(filt, source) : dsp::sos_filter(filt, source);
  }

  OnsetScan scan;
  double best_err = std::numeric_limits<double>::infinity();
  for (int s = lo; s <= hi; ++s) {
    const int start = nominal_onset_sample + s;
    std::vector<double> scores(n_cls, 0.0);
    for (int i = 0; i < n_cls; ++i) {
      double combined = 0.0;
      for (int bd = 0; bd < bank.n_bands(); ++bd) {
        const double rho = dsp::pearson(
            std::span<const double>(banded[bd].data() + start, len),
            std::span<const double>(bank.templates[i][bd].data(), len));
        const double sq = std::isnan(rho) ? 0.0 : rho * rho;
        combined += bank.fb_weights[bd] * sq;
      }
      scores[i] = combined;
    }

    // t-test of the top score against the distribution of the rest.
    const int arg = static_cast<int>(std::max_element(scores.begin(), scores.end()) -
                                     scores.begin());
    double mean = 0.0;
    for (int i = 0; i < n_cls; ++i)
      if (i != arg) mean += scores[i];
    mean /= (n_cls - 1);
    double var = 0.0;
    for (int i = 0; i < n_cls; ++i)
      if (i != arg) var += (scores[i] - mean) * (scores[i] - mean);
    var /= (n_cls - 2);
    const double sd = std::sqrt(var);

    double p;
    if (sd <= 0.0) {
      p = scores[arg] > mean ? 0.0 : 1.0;
    } else {
      p = dsp::student_t_sf((scores[arg] - mean) / sd, static_cast<double>(n_cls - 2));
    }

    scan.shifts_samples.push_back(s);
    scan.shifts_ms.push_back(1000.0 * s / fs_hz);
    scan.type1_error.push_back(p);
    if (p < best_err) {
      best_err = p;
      scan.detected_shift_samples = s;
      scan.detected_shift_ms = 1000.0 * s / fs_hz;
    }
  }
  return scan;
}

}  // namespace cvep
