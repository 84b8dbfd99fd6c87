#pragma once

#include <cstdint>
#include <vector>

#include "cvep/types.hpp"

namespace cvep {

struct AnnealSchedule {
  double t_initial = 1.0;
  double t_final = 1e-3;
  double cooling = 0.95;
  int iters_per_temp = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct JfpmSpec {
  double f_start_hz = 8.0;
  double f_step_hz = 0.2;
  int n_targets = 40;
  double phase_step_rad = 0.5 * 3.14159265358979323846;
  double frame_rate_hz = 60.0;

  void validate() const;
};

// n_codes sequences of n_frames i.i.d. uniform [0,1] values.
Codebook generate_wn_pool(int n_codes, int n_frames, std::uint64_t seed);

// Contrast levels for display: round(255 * frame), half away from zero.
std::vector<int> to_display_levels(const StimulusSequence& seq);

// Minimum pairwise Euclidean distance between the frame vectors of a subset.
double min_pairwise_distance(const Codebook& subset);

// Simulated annealing subset selection maximizing the minimum pairwise
// Euclidean distance. Returns the best subset seen, class ids renumbered.
Codebook select_codes(const Codebook& pool, int k, const AnnealSchedule& schedule);

// Minimum code distance over 8-neighbor adjacent cell pairs of a layout.
double layout_objective(const Codebook& codebook, const GridLayout& layout);

// Permute the class -> cell assignment to maximize the minimum distance
// between codes in adjacent cells. Never worse than the identity layout.
Codebook optimize_layout(const Codebook& codebook, int rows, int cols,
                         const AnnealSchedule& schedule);

// Sampled-sinusoid luminance codes: target i flickers at
// f_start + i*f_step with phase i*phase_step.
Codebook generate_jfpm(const JfpmSpec& spec, int n_frames);

}  // namespace cvep
