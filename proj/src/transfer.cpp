#include "cvep/transfer.hpp"

#include <algorithm>
#include <set>

#include "cvep/errors.hpp"

namespace cvep {

void SourceSubject::validate() const {
  calib_responses.validate();
  test_responses.validate();
  if (calib_responses.fs_hz != test_responses.fs_hz)
    throw InvariantViolation("calibration and test responses must share fs");
  if (filter_v.size() != calib_responses.n_channels())
    throw InvariantViolation("filter length must match the channel count");
  if (std::abs(filter_v.norm() - 1.0) > 1e-6)
    throw InvariantViolation("source filter must be unit norm");
}

namespace {

// Filtered class-mean time course of one subject's responses, concatenated
// over the given class ids.
Eigen::VectorXd filtered_concat(const EpochSet& responses, const Eigen::VectorXd& filter,
                                const std::vector<int>& class_ids) {
  const int ns = responses.n_samples();
  Eigen::VectorXd out(static_cast<long>(class_ids.size()) * ns);
  for (size_t k = 0; k < class_ids.size(); ++k) {
    const Eigen::MatrixXd mean = responses.class_mean(class_ids[k]);
    out.segment(static_cast<long>(k) * ns, ns) = (filter.transpose() * mean).transpose();
  }
  return out;
}

std::vector<int> sorted_classes(const EpochSet& e) {
  std::set<int> s(e.labels.begin(), e.labels.end());
  return std::vector<int>(s.begin(), s.end());
}

}  // namespace

TransferWeights fit_weights(const EpochSet& target_calib, const Eigen::VectorXd& target_filter,
                            const std::vector<SourceSubject>& sources,
                            std::optional<int> target_subject_id, bool allow_overlap) {
  if (sources.empty()) throw ArgumentError("no source subjects");
  target_calib.validate();
  if (target_filter.size() != target_calib.n_channels())
    throw ArgumentError("target filter length must match the channel count");

  const auto classes = sorted_classes(target_calib);
  const int ns = target_calib.n_samples();
  for (const auto& src : sources) {
    src.validate();
    if (target_subject_id && src.subject_id == *target_subject_id && !allow_overlap)
      throw ArgumentError("target subject present among sources");
    if (sorted_classes(src.calib_responses) != classes)
      throw ArgumentError("calibration class sets must match the target");
    if (src.calib_responses.n_samples() != ns || src.calib_responses.fs_hz != target_calib.fs_hz)
      throw ArgumentError("calibration duration and fs must match the target");
  }

  const Eigen::VectorXd b = filtered_concat(target_calib, target_filter, classes);
  Eigen::MatrixXd a(b.size(), static_cast<long>(sources.size()));
  for (size_t n = 0; n < sources.size(); ++n)
    a.col(static_cast<long>(n)) =
        filtered_concat(sources[n].calib_responses, sources[n].filter_v, classes);

  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::VectorXd atb = a.transpose() * b;
  const long n_sub = static_cast<long>(sources.size());

  Eigen::MatrixXd lhs = ata;
  if (Eigen::FullPivLU<Eigen::MatrixXd>(ata).rank() < n_sub) {
    const double ridge = 1e-8 * ata.trace() / static_cast<double>(n_sub);
    lhs += ridge * Eigen::MatrixXd::Identity(n_sub, n_sub);
  }
  TransferWeights weights;
  weights.w = lhs.ldlt().solve(atb);
  return weights;
}

TemplateBank build_transfer_templates(const TransferWeights& weights,
                                      const std::vector<SourceSubject>& sources,
                                      int n_test_classes, const FilterBankSpec& fb,
                                      double fb_a, double fb_b, int n_shifts) {
  if (sources.empty()) throw ArgumentError("no source subjects");
  if (weights.w.size() != static_cast<long>(sources.size()))
    throw ArgumentError("one weight per source required");

  const double fs = sources.front().test_responses.fs_hz;
  const int ns = sources.front().test_responses.n_samples();
  for (const auto& src : sources) {
    src.validate();
    for (int k = 0; k < n_test_classes; ++k) {
      if (std::find(src.test_responses.labels.begin(), src.test_responses.labels.end(), k) ==
          src.test_responses.labels.end())
        throw MissingDataError("source lacks a test class response");
    }
    if (src.test_responses.n_samples() != ns)
      throw ArgumentError("test responses must share duration");
  }

  std::vector<std::vector<double>> signals(n_test_classes, std::vector<double>(ns, 0.0));
  for (int k = 0; k < n_test_classes; ++k) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ns);
    for (size_t n = 0; n < sources.size(); ++n) {
      const Eigen::MatrixXd mean = sources[n].test_responses.class_mean(k);
      acc += weights.w(static_cast<long>(n)) *
             (sources[n].filter_v.transpose() * mean).transpose();
    }
    acc /= static_cast<double>(sources.size());
    for (int t = 0; t < ns; ++t) signals[k][t] = acc(t);
  }
  return make_template_bank(signals, fs, fb, fb_a, fb_b, n_shifts);
}

Eigen::MatrixXd leave_one_out_transfer(const std::vector<LooSubject>& subjects) {
  const int n = static_cast<int>(subjects.size());
  if (n < 2) throw ArgumentError("need at least two subjects");
  Eigen::MatrixXd acc(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto batch = batch_decode(subjects[i].test_trials, subjects[i].model,
                                      subjects[j].templates);
      acc(i, j) = batch.accuracy.value_or(0.0);
    }
  return acc;
}

}  // namespace cvep
