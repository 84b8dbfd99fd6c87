#pragma once

#include <complex>
#include <span>
#include <vector>

namespace cvep::dsp {

// One second-order section, denominator normalized to a0 = 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Cascade of biquads; the overall gain is folded into the first section.
struct SosFilter {
  std::vector<Biquad> sections;
  int order() const { return 2 * static_cast<int>(sections.size()); }
};

// Butterworth designs via analog prototype + bilinear transform with
// frequency pre-warping. `order` is the prototype order and must be even;
// a band-pass of prototype order n has 2n poles.
SosFilter butterworth_lowpass(int order, double cutoff_hz, double fs_hz);
SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz);

// Second-order IIR notch (Orfanidis), unity gain at DC and Nyquist.
SosFilter iir_notch(double f0_hz, double q, double fs_hz);

// Single forward pass, zero initial state.
std::vector<double> sos_filter(const SosFilter& f, std::span<const double> x);

// Forward-backward filtering with odd-reflect padding of 3*order samples
// and steady-state section initialization. Zero phase in the passband.
std::vector<double> filtfilt(const SosFilter& f, std::span<const double> x);

// Causal FIR convolution with zero initial history, output length n_out.
std::vector<double> convolve_causal(std::span<const double> kernel,
                                    std::span<const double> x, int n_out);

// DFT of a real signal (bins 0..n-1, unscaled).
std::vector<std::complex<double>> dft(std::span<const double> x);

// Hermitian-symmetric inverse: real signal from a full complex spectrum.
std::vector<double> idft_real(const std::vector<std::complex<double>>& spectrum);

// One-sided power spectral density with the convention that
// sum(psd)*df equals the mean square of the (optionally mean-removed)
// signal. Frequencies are k*fs/n for k = 0..n/2.
struct Psd {
  std::vector<double> freqs_hz;
  std::vector<double> power;
};
Psd periodogram(std::span<const double> x, double fs_hz, bool remove_mean = true);

// Pearson correlation; returns NaN when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// Upper-tail probability of Student's t distribution.
double student_t_sf(double t, double dof);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

}  // namespace cvep::dsp
