#include "cvep/trf.hpp"

#include <cmath>
#include <numeric>

#include "cvep/dsp.hpp"
#include "cvep/errors.hpp"

namespace cvep {

int lag_count(double tau_min_s, double tau_max_s, double fs_hz) {
  if (!(tau_min_s < tau_max_s)) throw ArgumentError("tau_min must be below tau_max");
  return static_cast<int>(std::lround((tau_max_s - tau_min_s) * fs_hz)) + 1;
}

LaggedDesign build_design(const Codebook& codebook, double fs_hz, int n_samples_per_class,
                          double tau_min_s, double tau_max_s, bool center) {
  codebook.validate();
  const int n_lags = lag_count(tau_min_s, tau_max_s, fs_hz);
  if (n_lags > n_samples_per_class)
    throw ArgumentError("lag window longer than the per-class sample count");
  const int lag0 = static_cast<int>(std::lround(tau_min_s * fs_hz));
  const int n_cls = codebook.n_classes();

  LaggedDesign d;
  d.n_lags = n_lags;
  d.samples_per_class = n_samples_per_class;
  d.n_classes = n_cls;
  d.matrix = Eigen::MatrixXd::Zero(static_cast<long>(n_cls) * n_samples_per_class, n_lags);

  for (int k = 0; k < n_cls; ++k) {
    const auto s = frames_to_samples(codebook.sequences[k], fs_hz, n_samples_per_class);
    const long row0 = static_cast<long>(k) * n_samples_per_class;
    for (int t = 0; t < n_samples_per_class; ++t)
      for (int lag = 0; lag < n_lags; ++lag) {
        const int src = t - (lag0 + lag);
        if (src >= 0 && src < n_samples_per_class) d.matrix(row0 + t, lag) = s[src];
      }
    if (center) {
      auto block = d.matrix.middleRows(row0, n_samples_per_class);
      block.rowwise() -= block.colwise().mean();
    }
  }
  return d;
}

Trf fit_trf(const LaggedDesign& design, const Eigen::VectorXd& response, double alpha,
            double tau_min_s, double tau_max_s, double fs_hz, RankRule rule) {
  if (response.size() != design.matrix.rows())
    throw ArgumentError("response length does not match the design");
  if (!(alpha > 0.0) || alpha > 1.0) throw ArgumentError("alpha must lie in (0,1]");
  if (design.matrix.isZero(0.0)) throw ZeroDesign("design matrix is identically zero");

  const Eigen::MatrixXd c = design.matrix.transpose() * design.matrix;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c);
  const int n = design.n_lags;

  Eigen::VectorXd lambda(n);   // descending
  Eigen::MatrixXd basis(n, n);
  for (int i = 0; i < n; ++i) {
    lambda(i) = std::max(solver.eigenvalues()(n - 1 - i), 0.0);
    basis.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  const double total = lambda.sum();

  int m;
  if (alpha >= 1.0) {
    // Plain LSE: keep every numerically nonzero eigenvalue.
    const double tol = lambda(0) * n * 1e-14;
    m = 0;
    for (int i = 0; i < n; ++i)
      if (lambda(i) > tol) ++m;
    m = std::max(m, 1);
  } else {
    double cum = 0.0;
    m = 0;
    for (int i = 0; i < n; ++i) {
      cum += lambda(i);
      const bool below = cum / total < alpha;
      if (rule == RankRule::kCumulativeBelowAlpha) {
        if (below) m = i + 1;
      } else if (!below) {
        m = i + 1;
        break;
      }
    }
    m = std::max(m, 1);
  }

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) inv(i) = 1.0 / lambda(i);
  const Eigen::VectorXd taps =
      basis * inv.asDiagonal() * basis.transpose() * (design.matrix.transpose() * response);

  Trf trf;
  trf.taps.assign(taps.data(), taps.data() + n);
  trf.tau_min_s = tau_min_s;
  trf.tau_max_s = tau_max_s;
  trf.fs_hz = fs_hz;
  trf.retained_rank = m;
  trf.alpha = alpha;
  trf.eigen_spectrum.assign(lambda.data(), lambda.data() + n);
  return trf;
}

Trf fit_trf_from_sources(const EpochSet& sources, const Codebook& codebook, double alpha,
                         double tau_min_s, double tau_max_s, RankRule rule) {
  sources.validate();
  if (sources.n_channels() != 1)
    throw ArgumentError("expected single-component source epochs");
  const int n_cls = codebook.n_classes();
  const int ns = sources.n_samples();
  const auto design = build_design(codebook, sources.fs_hz, ns, tau_min_s, tau_max_s);
  Eigen::VectorXd r(static_cast<long>(n_cls) * ns);
  for (int k = 0; k < n_cls; ++k) {
    const Eigen::MatrixXd mean = sources.class_mean(k);
    auto segment = r.segment(static_cast<long>(k) * ns, ns);
    segment = mean.row(0).transpose();
    segment.array() -= segment.mean();  // pairs with the centered design
  }
  return fit_trf(design, r, alpha, tau_min_s, tau_max_s, sources.fs_hz, rule);
}

std::vector<double> reconstruct_response(const Trf& trf, const StimulusSequence& seq,
                                         double fs_hz, int n_samples) {
  if (trf.taps.empty()) throw ArgumentError("TRF has no taps");
  if (trf.fs_hz != fs_hz) throw ArgumentError("TRF was fit at a different sampling rate");
  const auto s = frames_to_samples(seq, fs_hz, n_samples);
  const int lag0 = static_cast<int>(std::lround(trf.tau_min_s * fs_hz));
  if (lag0 == 0) return dsp::convolve_causal(trf.taps, s, n_samples);
  // Nonzero tau_min: shift the kernel start.
  std::vector<double> y(static_cast<size_t>(n_samples), 0.0);
  for (int t = 0; t < n_samples; ++t) {
    double acc = 0.0;
    for (int lag = 0; lag < trf.n_taps(); ++lag) {
      const int src = t - (lag0 + lag);
      if (src >= 0 && src < n_samples) acc += trf.taps[lag] * s[src];
    }
    y[t] = acc;
  }
  return y;
}

TemplateBank build_linear_templates(const Trf& trf, const Codebook& codebook, double fs_hz,
                                    double duration_s, const FilterBankSpec& fb,
                                    double fb_a, double fb_b, int n_shifts) {
  codebook.validate();
  const int n_samples = static_cast<int>(std::lround(duration_s * fs_hz));
  std::vector<std::vector<double>> signals;
  signals.reserve(codebook.sequences.size());
  for (const auto& seq : codebook.sequences)
    signals.push_back(reconstruct_response(trf, seq, fs_hz, n_samples));
  return make_template_bank(signals, fs_hz, fb, fb_a, fb_b, n_shifts);
}

TemplateBank reconstruct_ssvep_templates(const Trf& trf, const Codebook& codebook, double fs_hz,
                                         double duration_s, const FilterBankSpec& fb,
                                         double fb_a, double fb_b, int n_shifts,
                                         double band_low_hz, double band_high_hz) {
  codebook.validate();
  Trf banded = trf;
  banded.taps = bandpass(trf.taps, band_low_hz, band_high_hz, 4, fs_hz);
  return build_linear_templates(banded, codebook, fs_hz, duration_s, fb, fb_a, fb_b, n_shifts);
}

Trf average_trf(const std::vector<Trf>& trfs) {
  if (trfs.empty()) throw ArgumentError("no TRFs to average");
  Trf out = trfs.front();
  for (size_t i = 1; i < trfs.size(); ++i) {
    if (trfs[i].taps.size() != out.taps.size() || trfs[i].fs_hz != out.fs_hz)
      throw ArgumentError("TRFs must share lag window and sampling rate");
    for (size_t t = 0; t < out.taps.size(); ++t) out.taps[t] += trfs[i].taps[t];
  }
  for (double& t : out.taps) t /= static_cast<double>(trfs.size());
  out.retained_rank = 0;
  out.eigen_spectrum.clear();
  return out;
}

}  // namespace cvep
