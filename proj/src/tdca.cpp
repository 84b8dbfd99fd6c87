#include "cvep/tdca.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cvep/errors.hpp"

namespace cvep {

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> scatter_matrices(const EpochSet& epochs) {
  epochs.validate();
  std::set<int> classes(epochs.labels.begin(), epochs.labels.end());
  if (classes.size() < 2) throw DegenerateScatter("need at least two classes");
  if (epochs.n_trials() < 2) throw DegenerateScatter("need at least two trials");

  const int nc = epochs.n_channels();
  const Eigen::MatrixXd grand = epochs.grand_mean();

  Eigen::MatrixXd s_b = Eigen::MatrixXd::Zero(nc, nc);
  std::vector<Eigen::MatrixXd> class_means(epochs.n_classes());
  for (int cls : classes) {
    class_means[cls] = epochs.class_mean(cls);
    const Eigen::MatrixXd d = class_means[cls] - grand;
    s_b += d * d.transpose();
  }
  s_b /= static_cast<double>(classes.size());

  Eigen::MatrixXd s_w = Eigen::MatrixXd::Zero(nc, nc);
  for (int i = 0; i < epochs.n_trials(); ++i) {
    const Eigen::MatrixXd d = epochs.trials[i] - class_means[epochs.labels[i]];
    s_w += d * d.transpose();
  }
  s_w /= static_cast<double>(epochs.n_trials());

  return {s_b, s_w};
}

TdcaModel fit_tdca(const EpochSet& epochs, int n_components, double ridge_eps) {
  if (n_components < 1) throw ArgumentError("need at least one component");
  auto [s_b, s_w] = scatter_matrices(epochs);
  const int nc = epochs.n_channels();
  if (n_components > nc) throw ArgumentError("more components than channels");

  double ridge_scale = s_w.trace() / nc;
  if (ridge_scale <= 0.0) ridge_scale = s_b.trace() / nc;  // single-trial-per-class regime
  Eigen::MatrixXd s_w_reg = s_w + ridge_eps * ridge_scale * Eigen::MatrixXd::Identity(nc, nc);

  Eigen::LLT<Eigen::MatrixXd> llt(s_w_reg);
  if (llt.info() != Eigen::Success)
    throw SingularWithin("within-class scatter is singular; use a positive ridge");

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(s_b, s_w_reg);
  if (solver.info() != Eigen::Success)
    throw SingularWithin("generalized eigenproblem failed to converge");

  TdcaModel model;
  model.s_b = s_b;
  model.s_w = s_w;
  model.filters.resize(nc, n_components);
  model.eigenvalues.resize(n_components);
  // Eigen returns ascending eigenvalues; take the top ones.
  for (int c = 0; c < n_components; ++c) {
    const int idx = nc - 1 - c;
    Eigen::VectorXd u = solver.eigenvectors().col(idx);
    u.normalize();
    int arg_max = 0;
    u.cwiseAbs().maxCoeff(&arg_max);
    if (u(arg_max) < 0.0) u = -u;
    model.filters.col(c) = u;
    model.eigenvalues(c) = solver.eigenvalues()(idx);
  }

  // Spatial pattern p = Sigma_x u Sigma_s^{-1} on the calibration data.
  Eigen::MatrixXd centered(nc, epochs.n_trials() * epochs.n_samples());
  Eigen::VectorXd channel_mean = Eigen::VectorXd::Zero(nc);
  for (const auto& t : epochs.trials) channel_mean += t.rowwise().mean();
  channel_mean /= static_cast<double>(epochs.n_trials());
  for (int i = 0; i < epochs.n_trials(); ++i)
    centered.middleCols(i * epochs.n_samples(), epochs.n_samples()) =
        epochs.trials[i].colwise() - channel_mean;
  const double n_obs = static_cast<double>(centered.cols());
  const Eigen::MatrixXd sigma_x = centered * centered.transpose() / n_obs;
  const Eigen::MatrixXd sources = model.filters.transpose() * centered;
  const Eigen::MatrixXd sigma_s = sources * sources.transpose() / n_obs;
  model.pattern = sigma_x * model.filters * sigma_s.inverse();

  return model;
}

EpochSet spatial_filter(const EpochSet& epochs, const TdcaModel& model) {
  epochs.validate();
  if (epochs.n_channels() != model.n_channels())
    throw ArgumentError("channel count does not match the model");
  EpochSet out;
  out.labels = epochs.labels;
  out.fs_hz = epochs.fs_hz;
  for (int c = 0; c < model.n_components(); ++c)
    out.channel_names.push_back("s" + std::to_string(c + 1));
  out.trials.reserve(epochs.trials.size());
  for (const auto& t : epochs.trials)
    out.trials.push_back(model.filters.transpose() * t);
  return out;
}

EpochSet delay_embed(const EpochSet& epochs, int n_delays) {
  if (n_delays < 0) throw ArgumentError("delay count must be non-negative");
  if (n_delays == 0) return epochs;
  EpochSet out;
  out.labels = epochs.labels;
  out.fs_hz = epochs.fs_hz;
  const int nc = epochs.n_channels();
  const int ns = epochs.n_samples();
  for (int d = 0; d <= n_delays; ++d)
    for (int c = 0; c < nc; ++c) {
      std::string base = epochs.channel_names.empty() ? ("ch" + std::to_string(c + 1))
                                                      : epochs.channel_names[c];
      out.channel_names.push_back(d == 0 ? base : base + "+d" + std::to_string(d));
    }
  for (const auto& t : epochs.trials) {
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(nc * (n_delays + 1), ns);
    for (int d = 0; d <= n_delays; ++d)
      aug.middleRows(d * nc, nc).rightCols(ns - d) = t.leftCols(ns - d);
    out.trials.push_back(std::move(aug));
  }
  return out;
}

}  // namespace cvep
