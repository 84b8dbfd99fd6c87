#pragma once

#include <Eigen/Dense>
#include <utility>

#include "cvep/types.hpp"

namespace cvep {

// Class-generic spatial filter: Fisher criterion over between/within-class
// scatter, plus the forward-model spatial pattern.
struct TdcaModel {
  Eigen::MatrixXd filters;      // [n_channels x n_components], unit columns
  Eigen::MatrixXd pattern;      // [n_channels x n_components]
  Eigen::MatrixXd s_b, s_w;     // [n_channels x n_channels]
  Eigen::VectorXd eigenvalues;  // descending, one per component

  int n_channels() const { return static_cast<int>(filters.rows()); }
  int n_components() const { return static_cast<int>(filters.cols()); }
};

// Between- and within-class scatter. H_b stacks class means minus the grand
// mean scaled 1/sqrt(N_c); H_w stacks trials minus their class mean scaled
// 1/sqrt(N_t). Throws DegenerateScatter with fewer than two classes or trials.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> scatter_matrices(const EpochSet& epochs);

// Top generalized eigenvectors of (S_b, S_w + ridge). The ridge term is
// ridge_eps * trace(S_w)/n_ch * I (falling back to the S_b trace when S_w
// is identically zero). Columns are unit norm with the largest-magnitude
// entry positive.
TdcaModel fit_tdca(const EpochSet& epochs, int n_components = 1, double ridge_eps = 1e-6);

// Source activity per trial: X_s = filters^T X.
EpochSet spatial_filter(const EpochSet& epochs, const TdcaModel& model);

// Stack d extra delayed copies of every channel (zero-filled history).
EpochSet delay_embed(const EpochSet& epochs, int n_delays);

}  // namespace cvep
