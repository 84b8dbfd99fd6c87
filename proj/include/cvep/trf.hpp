#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cvep/decoder.hpp"
#include "cvep/preprocess.hpp"
#include "cvep/types.hpp"

namespace cvep {

// How Eq.-style cumulative-energy truncation picks the retained rank.
enum class RankRule {
  kCumulativeBelowAlpha,  // largest m with cumulative fraction strictly below alpha
  kAtLeastAlpha,          // smallest m with cumulative fraction at least alpha
};

// Linear temporal response function h(tau) over a fixed lag window.
struct Trf {
  std::vector<double> taps;  // length round((tau_max - tau_min) * fs) + 1
  double tau_min_s = 0.0;
  double tau_max_s = 0.5;
  double fs_hz = 250.0;
  int retained_rank = 0;
  double alpha = 0.9;
  std::vector<double> eigen_spectrum;  // descending

  int n_taps() const { return static_cast<int>(taps.size()); }
};

// Stacked lag matrices of the (mean-centered) stimulus codes, one block per
// class; column tau holds the stimulus delayed by tau samples, zero-filled
// before onset.
struct LaggedDesign {
  Eigen::MatrixXd matrix;  // [n_classes*n_samples x n_lags]
  int n_lags = 0;
  int samples_per_class = 0;
  int n_classes = 0;
};

int lag_count(double tau_min_s, double tau_max_s, double fs_hz);

// With center = true every lag column is centered within its class block,
// which pairs with block-centered responses in fit_trf_from_sources and
// leaves the fit insensitive to the DC the notch filter removes.
LaggedDesign build_design(const Codebook& codebook, double fs_hz, int n_samples_per_class,
                          double tau_min_s, double tau_max_s, bool center = true);

// Least squares with eigenvalue truncation of C = S~^T S~. `alpha >= 1`
// keeps every numerically nonzero eigenvalue (plain LSE).
Trf fit_trf(const LaggedDesign& design, const Eigen::VectorXd& response, double alpha,
            double tau_min_s, double tau_max_s, double fs_hz,
            RankRule rule = RankRule::kCumulativeBelowAlpha);

// Class-mean source responses concatenated in class order, then fit.
Trf fit_trf_from_sources(const EpochSet& sources, const Codebook& codebook, double alpha,
                         double tau_min_s, double tau_max_s,
                         RankRule rule = RankRule::kCumulativeBelowAlpha);

// r(t) = sum_tau h(tau) s(t - tau), zero history before onset.
std::vector<double> reconstruct_response(const Trf& trf, const StimulusSequence& seq,
                                         double fs_hz, int n_samples);

// One reconstructed template per class, band-filtered per sub-band.
TemplateBank build_linear_templates(const Trf& trf, const Codebook& codebook, double fs_hz,
                                    double duration_s, const FilterBankSpec& fb,
                                    double fb_a, double fb_b, int n_shifts);

// The TRF band-passed to the SSVEP band, then convolved with each
// (typically JFPM) sequence.
TemplateBank reconstruct_ssvep_templates(const Trf& trf, const Codebook& codebook, double fs_hz,
                                         double duration_s, const FilterBankSpec& fb,
                                         double fb_a, double fb_b, int n_shifts,
                                         double band_low_hz = 8.0, double band_high_hz = 15.8);

// Tap-wise mean; truncation metadata cleared.
Trf average_trf(const std::vector<Trf>& trfs);

}  // namespace cvep
