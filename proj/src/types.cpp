#include "cvep/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cvep {

void StimulusSequence::validate() const {
  if (frames.empty()) throw InvariantViolation("stimulus sequence has no frames");
  if (!(frame_rate_hz > 0.0)) throw InvariantViolation("frame rate must be positive");
  for (double v : frames) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw InvariantViolation("frame value outside [0,1]");
  }
}

void Codebook::validate() const {
  if (sequences.empty()) throw InvariantViolation("codebook has no sequences");
  const auto n = sequences.front().frames.size();
  const double rate = sequences.front().frame_rate_hz;
  std::set<int> ids;
  for (const auto& s : sequences) {
    s.validate();
    if (s.frames.size() != n) throw InvariantViolation("mixed sequence lengths in codebook");
    if (s.frame_rate_hz != rate) throw InvariantViolation("mixed frame rates in codebook");
    if (!ids.insert(s.class_id).second)
      throw InvariantViolation("duplicate class_id in codebook");
  }
  for (int i = 0; i < n_classes(); ++i) {
    if (!ids.count(i)) throw InvariantViolation("class_ids must be contiguous from 0");
  }
  if (layout) {
    if (layout->rows * layout->cols != n_classes())
      throw InvariantViolation("layout grid size does not match class count");
    if (static_cast<int>(layout->cell_of_class.size()) != n_classes())
      throw InvariantViolation("layout assignment size mismatch");
  }
}

Codebook Codebook::prefix(int n) const {
  if (n < 1 || n > n_classes()) throw ArgumentError("prefix size out of range");
  Codebook out;
  out.kind = kind;
  out.sequences.assign(sequences.begin(), sequences.begin() + n);
  for (int i = 0; i < n; ++i) out.sequences[i].class_id = i;
  return out;
}

int EpochSet::n_classes() const {
  int m = -1;
  for (int l : labels) m = std::max(m, l);
  return m + 1;
}

void EpochSet::validate() const {
  if (labels.size() != trials.size())
    throw InvariantViolation("labels length must equal trial count");
  if (!(fs_hz > 0.0)) throw InvariantViolation("fs_hz must be positive");
  const int nc = n_channels();
  const int ns = n_samples();
  for (const auto& t : trials) {
    if (t.rows() != nc || t.cols() != ns)
      throw InvariantViolation("ragged trial dimensions");
    if (!t.allFinite()) throw InvariantViolation("non-finite sample value");
  }
  for (int l : labels) {
    if (l < 0) throw InvariantViolation("negative class label");
  }
  if (!channel_names.empty() && static_cast<int>(channel_names.size()) != nc)
    throw InvariantViolation("channel_names size mismatch");
}

Eigen::MatrixXd EpochSet::class_mean(int class_id) const {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n_channels(), n_samples());
  int count = 0;
  for (int i = 0; i < n_trials(); ++i) {
    if (labels[i] == class_id) {
      acc += trials[i];
      ++count;
    }
  }
  if (count == 0) throw ArgumentError("no trials with requested class label");
  return acc / count;
}

Eigen::MatrixXd EpochSet::grand_mean() const {
  if (trials.empty()) throw ArgumentError("empty epoch set");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n_channels(), n_samples());
  for (const auto& t : trials) acc += t;
  return acc / static_cast<double>(trials.size());
}

EpochSet EpochSet::truncated(int n_keep) const {
  if (n_keep < 1 || n_keep > n_samples()) throw ArgumentError("truncation length out of range");
  EpochSet out;
  out.labels = labels;
  out.fs_hz = fs_hz;
  out.channel_names = channel_names;
  out.trials.reserve(trials.size());
  for (const auto& t : trials) out.trials.push_back(t.leftCols(n_keep));
  return out;
}

void RunConfig::validate() const {
  if (!(tau_min_s < tau_max_s)) throw InvariantViolation("tau_min_s must be below tau_max_s");
  if (n_filterbanks < 1) throw InvariantViolation("need at least one filter bank");
  if (!(svd_alpha > 0.0) || svd_alpha > 1.0) throw InvariantViolation("svd_alpha must lie in (0,1]");
  if (n_spatial_components < 1) throw InvariantViolation("need at least one spatial component");
  if (n_shifts < 0) throw InvariantViolation("shift budget must be non-negative");
  if (n_delay_embedding < 0) throw InvariantViolation("delay embedding must be non-negative");
  if (!(fs_hz > 0.0)) throw InvariantViolation("fs_hz must be positive");
}

}  // namespace cvep
