#include "cvep/stimulus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "cvep/errors.hpp"

namespace cvep {

void AnnealSchedule::validate() const {
  if (!(t_initial > 0.0) || !(t_final > 0.0)) throw InvariantViolation("temperatures must be positive");
  if (!(t_final < t_initial)) throw InvariantViolation("t_final must be below t_initial");
  if (!(cooling > 0.0 && cooling < 1.0)) throw InvariantViolation("cooling must lie in (0,1)");
  if (iters_per_temp < 1) throw InvariantViolation("iters_per_temp must be positive");
}

void JfpmSpec::validate() const {
  const double f_max = f_start_hz + (n_targets - 1) * f_step_hz;
  if (!(f_max < frame_rate_hz / 2.0))
    throw InvariantViolation("top frequency must stay below the display Nyquist");
  if (n_targets < 1) throw InvariantViolation("need at least one target");
}

Codebook generate_wn_pool(int n_codes, int n_frames, std::uint64_t seed) {
  if (n_codes < 1 || n_frames < 1) throw ArgumentError("pool dimensions must be positive");
  const auto total = static_cast<std::uint64_t>(n_codes) * static_cast<std::uint64_t>(n_frames);
  if (total > (1ull << 31)) throw CapacityError("pool exceeds the capacity guard");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Codebook cb;
  cb.kind = CodebookKind::kWhiteNoise;
  cb.sequences.resize(n_codes);
  for (int i = 0; i < n_codes; ++i) {
    auto& s = cb.sequences[i];
    s.class_id = i;
    s.frames.resize(n_frames);
    for (int t = 0; t < n_frames; ++t) s.frames[t] = uni(rng);
  }
  return cb;
}

std::vector<int> to_display_levels(const StimulusSequence& seq) {
  seq.validate();
  std::vector<int> levels(seq.frames.size());
  for (size_t i = 0; i < seq.frames.size(); ++i)
    levels[i] = static_cast<int>(std::lround(255.0 * seq.frames[i]));
  return levels;
}

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Pairwise distances between the selected members, indexed by slot.
struct SubsetDistances {
  Eigen::MatrixXd d;

  double minimum() const {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d.rows(); ++i)
      for (int j = i + 1; j < d.cols(); ++j) m = std::min(m, d(i, j));
    return m;
  }
};

SubsetDistances subset_distances(const Codebook& pool, const std::vector<int>& members) {
  const int k = static_cast<int>(members.size());
  SubsetDistances sd;
  sd.d = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      const double dist = euclidean(pool.sequences[members[i]].frames, pool.sequences[members[j]].frames);
      sd.d(i, j) = dist;
      sd.d(j, i) = dist;
    }
  return sd;
}

}  // namespace

double min_pairwise_distance(const Codebook& subset) {
  if (subset.n_classes() < 2) throw ArgumentError("need at least two codes");
  std::vector<int> all(subset.n_classes());
  for (int i = 0; i < subset.n_classes(); ++i) all[i] = i;
  return subset_distances(subset, all).minimum();
}

Codebook select_codes(const Codebook& pool, int k, const AnnealSchedule& schedule) {
  pool.validate();
  schedule.validate();
  if (k < 1 || k > pool.n_classes()) throw ArgumentError("subset size exceeds the pool");

  Codebook out;
  out.kind = pool.kind;
  if (k == pool.n_classes()) {
    out.sequences = pool.sequences;
    return out;
  }

  std::mt19937_64 rng(schedule.seed);
  const int n = pool.n_classes();
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> members(perm.begin(), perm.begin() + k);
  std::vector<int> outside(perm.begin() + k, perm.end());

  SubsetDistances sd = subset_distances(pool, members);
  double objective = sd.minimum();
  std::vector<int> best = members;
  double best_objective = objective;

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> pick_in(0, k - 1);
  std::uniform_int_distribution<int> pick_out(0, n - k - 1);

  for (double temp = schedule.t_initial; temp > schedule.t_final; temp *= schedule.cooling) {
    for (int it = 0; it < schedule.iters_per_temp; ++it) {
      const int slot = pick_in(rng);
      const int cand = pick_out(rng);

      // Trial move: replace members[slot] with outside[cand].
      std::vector<double> new_row(k, 0.0);
      const auto& cand_frames = pool.sequences[outside[cand]].frames;
      for (int j = 0; j < k; ++j) {
        if (j == slot) continue;
        new_row[j] = euclidean(cand_frames, pool.sequences[members[j]].frames);
      }
      double new_min = std::numeric_limits<double>::infinity();
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
          const double dij = (i == slot) ? new_row[j] : (j == slot ? new_row[i] : sd.d(i, j));
          new_min = std::min(new_min, dij);
        }

      const double delta = new_min - objective;
      bool accept = false;
      if (delta > 0.0) {
        accept = true;
      } else if (delta < 0.0) {
        accept = uni(rng) < std::exp(delta / temp);
      }  // equal objective keeps the incumbent
      if (!accept) continue;

      std::swap(members[slot], outside[cand]);
      for (int j = 0; j < k; ++j) {
        sd.d(slot, j) = new_row[j];
        sd.d(j, slot) = new_row[j];
      }
      objective = new_min;
      if (objective > best_objective) {
        best_objective = objective;
        best = members;
      }
    }
  }

  out.sequences.reserve(k);
  for (int i = 0; i < k; ++i) out.sequences.push_back(pool.sequences[best[i]]);
  for (int i = 0; i < k; ++i) out.sequences[i].class_id = i;
  return out;
}

namespace {

std::vector<std::pair<int, int>> adjacent_cells(int rows, int cols) {
  std::vector<std::pair<int, int>> pairs;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int r2 = r + dr, c2 = c + dc;
          if (r2 < 0 || r2 >= rows || c2 < 0 || c2 >= cols) continue;
          const int a = r * cols + c, b = r2 * cols + c2;
          if (a < b) pairs.emplace_back(a, b);
        }
  return pairs;
}

double layout_min(const Eigen::MatrixXd& dist, const std::vector<int>& class_of_cell,
                  const std::vector<std::pair<int, int>>& pairs) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : pairs)
    m = std::min(m, dist(class_of_cell[a], class_of_cell[b]));
  return m;
}

}  // namespace

double layout_objective(const Codebook& codebook, const GridLayout& layout) {
  codebook.validate();
  const int n = codebook.n_classes();
  if (layout.rows * layout.cols != n) throw ArgumentError("grid size must match class count");
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      dist(i, j) = euclidean(codebook.sequences[i].frames, codebook.sequences[j].frames);
  std::vector<int> class_of_cell(n);
  for (int cls = 0; cls < n; ++cls) class_of_cell[layout.cell_of_class[cls]] = cls;
  return layout_min(dist, class_of_cell, adjacent_cells(layout.rows, layout.cols));
}

Codebook optimize_layout(const Codebook& codebook, int rows, int cols,
                         const AnnealSchedule& schedule) {
  codebook.validate();
  schedule.validate();
  const int n = codebook.n_classes();
  if (rows * cols != n) throw ArgumentError("grid size must match class count");

  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      dist(i, j) = euclidean(codebook.sequences[i].frames, codebook.sequences[j].frames);
  const auto pairs = adjacent_cells(rows, cols);

  std::vector<int> class_of_cell(n);
  for (int i = 0; i < n; ++i) class_of_cell[i] = i;  // identity layout
  double objective = layout_min(dist, class_of_cell, pairs);
  std::vector<int> best = class_of_cell;
  double best_objective = objective;

  std::mt19937_64 rng(schedule.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, n - 1);

  for (double temp = schedule.t_initial; temp > schedule.t_final; temp *= schedule.cooling) {
    for (int it = 0; it < schedule.iters_per_temp; ++it) {
      const int a = pick(rng);
      const int b = pick(rng);
      if (a == b) continue;
      std::swap(class_of_cell[a], class_of_cell[b]);
      const double new_objective = layout_min(dist, class_of_cell, pairs);
      const double delta = new_objective - objective;
      bool accept = false;
      if (delta > 0.0) {
        accept = true;
      } else if (delta < 0.0) {
        accept = uni(rng) < std::exp(delta / temp);
      }
      if (!accept) {
        std::swap(class_of_cell[a], class_of_cell[b]);
        continue;
      }
      objective = new_objective;
      if (objective > best_objective) {
        best_objective = objective;
        best = class_of_cell;
      }
    }
  }

  Codebook out = codebook;
  GridLayout layout;
  layout.rows = rows;
  layout.cols = cols;
  layout.cell_of_class.resize(n);
  for (int cell = 0; cell < n; ++cell) layout.cell_of_class[best[cell]] = cell;
  out.layout = layout;
  return out;
}

Codebook generate_jfpm(const JfpmSpec& spec, int n_frames) {
  spec.validate();
  if (n_frames < 1) throw ArgumentError("need at least one frame");
  Codebook cb;
  cb.kind = CodebookKind::kJfpm;
  cb.sequences.resize(spec.n_targets);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < spec.n_targets; ++i) {
    const double f = spec.f_start_hz + spec.f_step_hz * i;
    const double phase = std::fmod(spec.phase_step_rad * i, two_pi);
    auto& s = cb.sequences[i];
    s.class_id = i;
    s.frame_rate_hz = spec.frame_rate_hz;
    s.frames.resize(n_frames);
    for (int t = 0; t < n_frames; ++t) {
      const double time_s = static_cast<double>(t) / spec.frame_rate_hz;
      s.frames[t] = 0.5 * (1.0 + std::sin(two_pi * f * time_s + phase));
    }
  }
  return cb;
}

}  // namespace cvep
