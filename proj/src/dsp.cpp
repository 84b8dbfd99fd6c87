#include "cvep/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cvep/errors.hpp"

namespace cvep::dsp {

namespace {

using cd = std::complex<double>;

// Upper-half-plane poles of the normalized analog Butterworth prototype.
std::vector<cd> prototype_poles_upper(int order) {
  if (order < 2 || order % 2 != 0)
    throw ArgumentError("butterworth design requires a positive even order");
  std::vector<cd> poles;
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + 1.0) / (2.0 * order) + std::numbers::pi / 2.0;
    cd p = std::polar(1.0, theta);
    if (p.imag() > 0.0) poles.push_back(p);
  }
  return poles;
}

double bilinear_pole(cd s_pole, double fs2, Biquad& bq) {
  // Digital pole z = (fs2 + s)/(fs2 - s); returns |fs2 - s|^2 for the gain.
  const cd z = (fs2 + s_pole) / (fs2 - s_pole);
  bq.a1 = -2.0 * z.real();
  bq.a2 = std::norm(z);
  return std::norm(fs2 - s_pole);
}

void fold_gain(SosFilter& f, double gain) {
  if (f.sections.empty()) throw ArgumentError("empty filter");
  f.sections.front().b0 *= gain;
  f.sections.front().b1 *= gain;
  f.sections.front().b2 *= gain;
}

double warp(double f_hz, double fs_hz) {
  return 2.0 * fs_hz * std::tan(std::numbers::pi * f_hz / fs_hz);
}

}  // namespace

SosFilter butterworth_lowpass(int order, double cutoff_hz, double fs_hz) {
  if (!(cutoff_hz > 0.0) || cutoff_hz >= fs_hz / 2.0)
    throw ArgumentError("cutoff must lie in (0, fs/2)");
  const double wc = warp(cutoff_hz, fs_hz);
  const double fs2 = 2.0 * fs_hz;

  SosFilter f;
  double gain = 1.0;
  for (cd p : prototype_poles_upper(order)) {
    const cd sp = wc * p;
    Biquad bq;
    const double denom = bilinear_pole(sp, fs2, bq);
    // Conjugate pair of analog poles and two digital zeros at z = -1.
    bq.b0 = 1.0;
    bq.b1 = 2.0;
    bq.b2 = 1.0;
    gain *= wc * wc / denom;
    f.sections.push_back(bq);
  }
  fold_gain(f, gain);
  return f;
}

SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz) {
  if (!(0.0 < low_hz && low_hz < high_hz && high_hz < fs_hz / 2.0))
    throw ArgumentError("band edges must satisfy 0 < low < high < fs/2");
  const double w1 = warp(low_hz, fs_hz);
  const double w2 = warp(high_hz, fs_hz);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;
  const double fs2 = 2.0 * fs_hz;

  SosFilter f;
  double gain = 1.0;
  for (cd p : prototype_poles_upper(order)) {
    // Each prototype pole maps to two band-pass poles; their conjugates
    // come from the conjugate prototype pole and stay implicit.
    const cd half = p * (bw / 2.0);
    const cd root = std::sqrt(half * half - w0sq);
    for (const cd sp : {half + root, half - root}) {
      Biquad bq;
      const double denom = bilinear_pole(sp, fs2, bq);
      // One analog zero at s=0 per section (z=+1) plus one bilinear
      // zero at z=-1: numerator (1, 0, -1).
      bq.b0 = 1.0;
      bq.b1 = 0.0;
      bq.b2 = -1.0;
      gain *= bw * fs2 / denom;
      f.sections.push_back(bq);
    }
  }
  fold_gain(f, gain);
  return f;
}

SosFilter iir_notch(double f0_hz, double q, double fs_hz) {
  if (!(f0_hz > 0.0) || f0_hz >= fs_hz / 2.0)
    throw ArgumentError("notch frequency must lie in (0, fs/2)");
  const double w0 = 2.0 * std::numbers::pi * f0_hz / fs_hz;
  const double beta = std::tan(w0 / (2.0 * q));
  const double g = 1.0 / (1.0 + beta);
  Biquad bq;
  bq.b0 = g;
  bq.b1 = -2.0 * g * std::cos(w0);
  bq.b2 = g;
  bq.a1 = -2.0 * g * std::cos(w0);
  bq.a2 = 2.0 * g - 1.0;
  SosFilter f;
  f.sections.push_back(bq);
  return f;
}

namespace {

// Direct form II transposed, one section.
void run_section(const Biquad& s, std::vector<double>& x, double z1_init, double z2_init) {
  double z1 = z1_init, z2 = z2_init;
  for (double& v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

// Steady-state DF2T state for a constant input of 1.
void steady_state(const Biquad& s, double& z1, double& z2) {
  const double denom = 1.0 + s.a1 + s.a2;
  const double h1 = std::abs(denom) > 1e-300 ? (s.b0 + s.b1 + s.b2) / denom : 0.0;
  z2 = s.b2 - s.a2 * h1;
  z1 = s.b1 - s.a1 * h1 + z2;
}

std::vector<double> run_cascade(const SosFilter& f, std::vector<double> x, bool steady_init) {
  for (const auto& s : f.sections) {
    double z1 = 0.0, z2 = 0.0;
    if (steady_init && !x.empty()) {
      steady_state(s, z1, z2);
      z1 *= x.front();
      z2 *= x.front();
    }
    run_section(s, x, z1, z2);
  }
  return x;
}

}  // namespace

std::vector<double> sos_filter(const SosFilter& f, std::span<const double> x) {
  return run_cascade(f, std::vector<double>(x.begin(), x.end()), false);
}

std::vector<double> filtfilt(const SosFilter& f, std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n == 0) return {};
  const int pad = std::min(3 * f.order(), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (int i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (int i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  ext = run_cascade(f, std::move(ext), true);
  std::reverse(ext.begin(), ext.end());
  ext = run_cascade(f, std::move(ext), true);
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + pad, ext.begin() + pad + n);
}

std::vector<double> convolve_causal(std::span<const double> kernel,
                                    std::span<const double> x, int n_out) {
  std::vector<double> y(static_cast<size_t>(n_out), 0.0);
  const int kl = static_cast<int>(kernel.size());
  const int xl = static_cast<int>(x.size());
  for (int t = 0; t < n_out; ++t) {
    double acc = 0.0;
    const int tau_max = std::min(kl - 1, t);
    for (int tau = 0; tau <= tau_max; ++tau) {
      const int xi = t - tau;
      if (xi < xl) acc += kernel[tau] * x[xi];
    }
    y[t] = acc;
  }
  return y;
}

std::vector<std::complex<double>> dft(std::span<const double> x) {
  Eigen::FFT<double> fft;
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> half;
  fft.fwd(half, in);  // real input yields bins 0..n/2
  // Expand to the full spectrum for callers that index all n bins.
  const size_t n = in.size();
  std::vector<std::complex<double>> full(n);
  for (size_t k = 0; k < half.size() && k < n; ++k) full[k] = half[k];
  for (size_t k = half.size(); k < n; ++k) full[k] = std::conj(full[n - k]);
  return full;
}

std::vector<double> idft_real(const std::vector<std::complex<double>>& spectrum) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> time;
  std::vector<std::complex<double>> spec = spectrum;
  fft.inv(time, spec);
  std::vector<double> out(spec.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = time[i].real();
  return out;
}

Psd periodogram(std::span<const double> x, double fs_hz, bool remove_mean) {
  const size_t n = x.size();
  if (n < 2) throw ArgumentError("periodogram needs at least two samples");
  std::vector<double> v(x.begin(), x.end());
  if (remove_mean) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    for (double& s : v) s -= mean;
  }
  auto spec = dft(v);
  const size_t n_half = n / 2;
  Psd out;
  out.freqs_hz.resize(n_half + 1);
  out.power.resize(n_half + 1);
  for (size_t k = 0; k <= n_half; ++k) {
    out.freqs_hz[k] = fs_hz * static_cast<double>(k) / static_cast<double>(n);
    double scale = 2.0;
    if (k == 0 || (n % 2 == 0 && k == n_half)) scale = 1.0;
    out.power[k] = scale * std::norm(spec[k]) / (fs_hz * static_cast<double>(n));
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw ArgumentError("incomplete_beta domain is [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  // Continued fraction (Lentz), switching tails for convergence.
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);

  const double ln_front = a * std::log(x) + b * std::log(1.0 - x) -
                          (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  const double front = std::exp(ln_front) / a;

  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double result = d;

  for (int m = 1; m <= 300; ++m) {
    const double md = static_cast<double>(m);
    double num = md * (b - md) * x / ((a + 2.0 * md - 1.0) * (a + 2.0 * md));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    result *= d * c;

    num = -(a + md) * (a + b + md) * x / ((a + 2.0 * md) * (a + 2.0 * md + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    result *= delta;
    if (std::abs(delta - 1.0) < 1e-14) break;
  }
  return front * result;
}

double student_t_sf(double t, double dof) {
  if (dof <= 0.0) throw ArgumentError("degrees of freedom must be positive");
  const double x = dof / (dof + t * t);
  const double half_tail = 0.5 * incomplete_beta(dof / 2.0, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

}  // namespace cvep::dsp
