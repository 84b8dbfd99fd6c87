#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "cvep/types.hpp"

namespace cvep {

// Additive noise mix: white + 1/sqrt(f)-shaped pink + a 10 Hz resonance.
// Each component is unit RMS before its gain is applied.
struct NoiseSpec {
  double white_sigma = 1.0;
  double pink_gain = 1.0;
  double alpha_gain = 0.5;
};

// Ground-truth generative model for one simulated subject.
struct VirtualSubject {
  int subject_id = 0;
  std::vector<double> true_trf;    // h0 over the lag window
  Eigen::VectorXd true_pattern;    // p0, one weight per channel
  double nonlinearity_gain = 0.0;  // weight of the squared-response term
  NoiseSpec noise;
  std::uint64_t seed = 0;
  double tau_min_s = 0.0;
  double tau_max_s = 0.5;
};

struct PopulationSpec {
  int n_subjects = 10;
  int n_channels = 8;
  double fs_hz = 250.0;
  double tau_min_s = 0.0;
  double tau_max_s = 0.5;
  double amplitude_jitter = 0.2;    // relative, uniform in [1-j, 1+j]
  double latency_jitter_s = 0.012;  // uniform in [-j, +j]
  double pattern_jitter = 0.15;
  double nonlinearity_gain = 0.1;
  NoiseSpec noise;
};

// Canonical TRF morphology: negative lobes near 60 and 180 ms around a
// positive peak at 100 ms, peak magnitude 1.
std::vector<double> prototype_trf(double fs_hz, double tau_min_s, double tau_max_s);

// Subjects sharing the prototype waveform with per-subject amplitude,
// latency, and pattern jitter.
std::vector<VirtualSubject> make_population(const PopulationSpec& spec, std::uint64_t seed);

// Forward model: source y = h0*s + g*(h0*s)^2; channel c = p0[c]*y + noise.
// Deterministic given (subject, codebook, seed); trials are class-major.
EpochSet simulate_epochs(const VirtualSubject& subject, const Codebook& codebook,
                         int n_trials_per_class, double duration_s, double fs_hz);

// Copy of the subject with noise gains scaled so the channel-averaged
// signal-to-noise variance ratio hits the requested dB level.
VirtualSubject with_source_snr_db(const VirtualSubject& subject, const Codebook& codebook,
                                  double snr_db, double duration_s, double fs_hz);

}  // namespace cvep
