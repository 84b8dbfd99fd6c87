#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "cvep/decoder.hpp"
#include "cvep/tdca.hpp"
#include "cvep/types.hpp"

namespace cvep {

// One source subject's contribution: class-mean responses under the
// calibration and test codebooks (one trial per class, labels = class ids)
// plus the subject's own spatial filter.
struct SourceSubject {
  int subject_id = 0;
  EpochSet calib_responses;
  EpochSet test_responses;
  Eigen::VectorXd filter_v;  // unit norm

  void validate() const;
};

struct TransferWeights {
  Eigen::VectorXd w;  // one weight per source subject
};

// Least-squares weights matching the target's filtered calibration responses
// with the weighted cross-subject responses. Refuses a source that shares
// the target's id unless allow_overlap is set.
TransferWeights fit_weights(const EpochSet& target_calib, const Eigen::VectorXd& target_filter,
                            const std::vector<SourceSubject>& sources,
                            std::optional<int> target_subject_id = std::nullopt,
                            bool allow_overlap = false);

// Template per test class: mean over sources of w_n times the source's
// filtered class response, band copies attached.
TemplateBank build_transfer_templates(const TransferWeights& weights,
                                      const std::vector<SourceSubject>& sources,
                                      int n_test_classes, const FilterBankSpec& fb,
                                      double fb_a, double fb_b, int n_shifts);

// Inputs for the cross-subject predictability matrix.
struct LooSubject {
  EpochSet test_trials;  // labeled single trials
  TdcaModel model;       // the subject's own spatial filter
  TemplateBank templates;
};

// Entry (i, j): accuracy decoding subject i's test trials with subject j's
// templates (subject i's own spatial filter).
Eigen::MatrixXd leave_one_out_transfer(const std::vector<LooSubject>& subjects);

}  // namespace cvep
