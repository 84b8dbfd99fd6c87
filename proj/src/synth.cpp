#include "cvep/synth.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "cvep/dsp.hpp"
#include "cvep/errors.hpp"
#include "cvep/preprocess.hpp"

namespace cvep {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Per-(trial, channel) stream so generation order never matters.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(base ^ (a * 0x9e3779b97f4a7c15ull)) ^ b);
}

std::vector<double> white_noise(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

void normalize_rms(std::vector<double>& v) {
  double power = 0.0;
  for (double x : v) power += x * x;
  power /= static_cast<double>(v.size());
  if (power <= 0.0) return;
  const double inv = 1.0 / std::sqrt(power);
  for (double& x : v) x *= inv;
}

// Spectrally masked Gaussian noise, unit RMS.
std::vector<double> shaped_noise(std::mt19937_64& rng, int n, double fs,
                                 const std::function<double(double)>& mask) {
  auto spec = dsp::dft(white_noise(rng, n));
  for (int k = 0; k < n; ++k) {
    const int sym = std::min(k, n - k);
    const double f = fs * static_cast<double>(sym) / static_cast<double>(n);
    spec[k] *= mask(f);
  }
  spec[0] = 0.0;
  auto v = dsp::idft_real(spec);
  normalize_rms(v);
  return v;
}

std::vector<double> channel_noise(std::mt19937_64& rng, int n, double fs, const NoiseSpec& spec) {
  std::vector<double> out(n, 0.0);
  if (spec.white_sigma > 0.0) {
    auto w = white_noise(rng, n);
    for (int i = 0; i < n; ++i) out[i] += spec.white_sigma * w[i];
  }
  if (spec.pink_gain > 0.0) {
    auto p = shaped_noise(rng, n, fs, [](double f) { return f > 0.0 ? 1.0 / std::sqrt(f) : 0.0; });
    for (int i = 0; i < n; ++i) out[i] += spec.pink_gain * p[i];
  }
  if (spec.alpha_gain > 0.0) {
    auto a = shaped_noise(rng, n, fs, [](double f) {
      const double d = (f - 10.0) / 1.0;
      return std::exp(-0.5 * d * d);
    });
    for (int i = 0; i < n; ++i) out[i] += spec.alpha_gain * a[i];
  }
  return out;
}

double noise_variance(const NoiseSpec& spec) {
  // Components are unit RMS and independent.
  return spec.white_sigma * spec.white_sigma + spec.pink_gain * spec.pink_gain +
         spec.alpha_gain * spec.alpha_gain;
}

std::vector<double> source_response(const VirtualSubject& subject, const StimulusSequence& seq,
                                    double fs, int n_samples) {
  const auto s = frames_to_samples(seq, fs, n_samples);
  auto y = dsp::convolve_causal(subject.true_trf, s, n_samples);
  if (subject.nonlinearity_gain != 0.0)
    for (double& v : y) v += subject.nonlinearity_gain * v * v;
  return y;
}

}  // namespace

std::vector<double> prototype_trf(double fs_hz, double tau_min_s, double tau_max_s) {
  if (tau_min_s > 0.0 || tau_max_s < 0.3)
    throw ArgumentError("lag window must cover [0, 0.3] s");
  const int n = static_cast<int>(std::lround((tau_max_s - tau_min_s) * fs_hz)) + 1;
  struct Lobe {
    double center_s, width_s, amplitude;
  };
  const Lobe lobes[] = {{0.060, 0.015, -0.65}, {0.100, 0.020, 1.0}, {0.180, 0.028, -0.5}};
  std::vector<double> h(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double tau = tau_min_s + static_cast<double>(i) / fs_hz;
    for (const auto& lobe : lobes) {
      const double d = (tau - lobe.center_s) / lobe.width_s;
      h[i] += lobe.amplitude * std::exp(-0.5 * d * d);
    }
  }
  double peak = 0.0;
  for (double v : h) peak = std::max(peak, std::abs(v));
  for (double& v : h) v /= peak;
  return h;
}

std::vector<VirtualSubject> make_population(const PopulationSpec& spec, std::uint64_t seed) {
  if (spec.n_subjects < 1) throw ArgumentError("need at least one subject");
  if (spec.n_channels < 1) throw ArgumentError("need at least one channel");
  const auto proto = prototype_trf(spec.fs_hz, spec.tau_min_s, spec.tau_max_s);
  const int n_taps = static_cast<int>(proto.size());

  // Occipital-weighted pattern prototype: strongest on the last channels.
  Eigen::VectorXd pattern_proto(spec.n_channels);
  const double sigma = std::max(1.0, spec.n_channels / 4.0);
  for (int c = 0; c < spec.n_channels; ++c) {
    const double d = static_cast<double>(spec.n_channels - 1 - c) / sigma;
    pattern_proto(c) = std::exp(-0.5 * d * d);
  }

  std::vector<VirtualSubject> subjects;
  subjects.reserve(spec.n_subjects);
  for (int s = 0; s < spec.n_subjects; ++s) {
    std::mt19937_64 rng(mix_seed(seed, 0x50bull, static_cast<std::uint64_t>(s)));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    VirtualSubject subject;
    subject.subject_id = s;
    subject.seed = mix_seed(seed, 0xda7aull, static_cast<std::uint64_t>(s));
    subject.tau_min_s = spec.tau_min_s;
    subject.tau_max_s = spec.tau_max_s;
    subject.nonlinearity_gain = spec.nonlinearity_gain;
    subject.noise = spec.noise;

    const double amp = 1.0 + spec.amplitude_jitter * uni(rng);
    const int shift = static_cast<int>(std::lround(spec.latency_jitter_s * uni(rng) * spec.fs_hz));
    subject.true_trf.assign(n_taps, 0.0);
    for (int i = 0; i < n_taps; ++i) {
      const int src = i - shift;
      if (src >= 0 && src < n_taps) subject.true_trf[i] = amp * proto[src];
    }

    subject.true_pattern = pattern_proto;
    for (int c = 0; c < spec.n_channels; ++c)
      subject.true_pattern(c) += spec.pattern_jitter * uni(rng);
    if (subject.true_pattern.norm() == 0.0) subject.true_pattern(spec.n_channels - 1) = 1.0;
    subjects.push_back(std::move(subject));
  }
  return subjects;
}

EpochSet simulate_epochs(const VirtualSubject& subject, const Codebook& codebook,
                         int n_trials_per_class, double duration_s, double fs_hz) {
  codebook.validate();
  if (n_trials_per_class < 1) throw ArgumentError("need at least one trial per class");
  if (subject.true_trf.empty()) throw ArgumentError("subject has no TRF");
  const int n_samples = static_cast<int>(std::lround(duration_s * fs_hz));
  if (n_samples < static_cast<int>(subject.true_trf.size()))
    throw ArgumentError("duration must cover the TRF length");
  const int n_ch = static_cast<int>(subject.true_pattern.size());

  EpochSet out;
  out.fs_hz = fs_hz;
  for (int c = 0; c < n_ch; ++c) out.channel_names.push_back("ch" + std::to_string(c + 1));

  for (int k = 0; k < codebook.n_classes(); ++k) {
    const auto y = source_response(subject, codebook.sequences[k], fs_hz, n_samples);
    for (int rep = 0; rep < n_trials_per_class; ++rep) {
      Eigen::MatrixXd trial(n_ch, n_samples);
      const std::uint64_t trial_idx =
          static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(n_trials_per_class) + rep;
      for (int c = 0; c < n_ch; ++c) {
        std::mt19937_64 rng(mix_seed(subject.seed, trial_idx, static_cast<std::uint64_t>(c)));
        const auto noise = channel_noise(rng, n_samples, fs_hz, subject.noise);
        for (int t = 0; t < n_samples; ++t)
          trial(c, t) = subject.true_pattern(c) * y[t] + noise[t];
      }
      out.trials.push_back(std::move(trial));
      out.labels.push_back(k);
    }
  }
  return out;
}

VirtualSubject with_source_snr_db(const VirtualSubject& subject, const Codebook& codebook,
                                  double snr_db, double duration_s, double fs_hz) {
  codebook.validate();
  const int n_samples = static_cast<int>(std::lround(duration_s * fs_hz));

  // Mean signal variance per channel over the codebook.
  double var_y = 0.0;
  for (const auto& seq : codebook.sequences) {
    const auto y = source_response(subject, seq, fs_hz, n_samples);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= y.size();
    double acc = 0.0;
    for (double v : y) acc += (v - mean) * (v - mean);
    var_y += acc / y.size();
  }
  var_y /= codebook.n_classes();
  const double pattern_sq = subject.true_pattern.squaredNorm() /
                            static_cast<double>(subject.true_pattern.size());
  const double signal_var = pattern_sq * var_y;

  const double current_noise = noise_variance(subject.noise);
  if (current_noise <= 0.0) throw ArgumentError("subject has no noise to scale");
  const double target_noise = signal_var / std::pow(10.0, snr_db / 10.0);
  const double scale = std::sqrt(target_noise / current_noise);

  VirtualSubject scaled = subject;
  scaled.noise.white_sigma *= scale;
  scaled.noise.pink_gain *= scale;
  scaled.noise.alpha_gain *= scale;
  return scaled;
}

}  // namespace cvep
