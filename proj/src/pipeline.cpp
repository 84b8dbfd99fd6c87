#include "cvep/pipeline.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "cvep/decoder.hpp"
#include "cvep/errors.hpp"
#include "cvep/io.hpp"
#include "cvep/metrics.hpp"
#include "cvep/stimulus.hpp"
#include "cvep/synth.hpp"
#include "cvep/tdca.hpp"
#include "cvep/transfer.hpp"
#include "cvep/trf.hpp"

namespace cvep {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// A stage input that should already exist on disk.
class MissingInput final : public Error {
 public:
  MissingInput(std::string stage, const std::string& what)
      : Error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

std::uint64_t fnv1a(const char* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string string_hash(const std::string& text) {
  return to_hex(fnv1a(text.data(), text.size()));
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot hash missing file: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  return to_hex(h);
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  if (!fs::exists(path)) throw MissingInput("config", "config file not found: " + path.string());
  json j;
  std::ifstream(path) >> j;

  PipelineConfig c;
  c.name = j.value("name", c.name);
  if (j.contains("run")) {
    const auto& r = j["run"];
    c.run.seed = r.value("seed", c.run.seed);
    c.run.fs_hz = r.value("fs_hz", c.run.fs_hz);
    c.run.n_filterbanks = r.value("n_filterbanks", c.run.n_filterbanks);
    c.run.fb_weight_a = r.value("fb_weight_a", c.run.fb_weight_a);
    c.run.fb_weight_b = r.value("fb_weight_b", c.run.fb_weight_b);
    c.run.n_shifts = r.value("n_shifts", c.run.n_shifts);
    c.run.tau_min_s = r.value("tau_min_s", c.run.tau_min_s);
    c.run.tau_max_s = r.value("tau_max_s", c.run.tau_max_s);
    c.run.svd_alpha = r.value("svd_alpha", c.run.svd_alpha);
    c.run.n_spatial_components = r.value("n_spatial_components", c.run.n_spatial_components);
    c.run.n_delay_embedding = r.value("n_delay_embedding", c.run.n_delay_embedding);
    c.run.gaze_shift_s = r.value("gaze_shift_s", c.run.gaze_shift_s);
  }
  if (j.contains("design")) {
    const auto& d = j["design"];
    c.calib_classes = d.value("calib_classes", c.calib_classes);
    c.test_classes = d.value("test_classes", c.test_classes);
    c.frames_per_trial = d.value("frames_per_trial", c.frames_per_trial);
    c.pool_size = d.value("pool_size", c.pool_size);
    c.layout_rows = d.value("layout_rows", c.layout_rows);
    c.layout_cols = d.value("layout_cols", c.layout_cols);
  }
  if (j.contains("codebooks")) {
    const auto& cb = j["codebooks"];
    if (cb.contains("calib")) c.calib_codebook_path = fs::path(cb["calib"].get<std::string>());
    if (cb.contains("test")) c.test_codebook_path = fs::path(cb["test"].get<std::string>());
  }
  if (j.contains("simulate")) {
    const auto& s = j["simulate"];
    c.n_channels = s.value("n_channels", c.n_channels);
    c.n_source_subjects = s.value("n_source_subjects", c.n_source_subjects);
    c.calib_trials_per_class = s.value("calib_trials_per_class", c.calib_trials_per_class);
    c.calib_duration_s = s.value("calib_duration_s", c.calib_duration_s);
    c.test_trials_per_class = s.value("test_trials_per_class", c.test_trials_per_class);
    c.test_duration_s = s.value("test_duration_s", c.test_duration_s);
    c.source_test_trials_per_class =
        s.value("source_test_trials_per_class", c.source_test_trials_per_class);
    c.snr_db = s.value("snr_db", c.snr_db);
    c.nonlinearity_gain = s.value("nonlinearity_gain", c.nonlinearity_gain);
    c.amplitude_jitter = s.value("amplitude_jitter", c.amplitude_jitter);
    c.latency_jitter_s = s.value("latency_jitter_s", c.latency_jitter_s);
    c.pattern_jitter = s.value("pattern_jitter", c.pattern_jitter);
  }
  if (j.contains("decode")) {
    const auto& d = j["decode"];
    c.linear_window_s = d.value("linear_window_s", c.linear_window_s);
    c.transfer_window_s = d.value("transfer_window_s", c.transfer_window_s);
  }
  c.run.validate();
  return c;
}

namespace {

// One trial per class holding the class mean.
EpochSet class_mean_set(const EpochSet& epochs) {
  EpochSet out;
  out.fs_hz = epochs.fs_hz;
  out.channel_names = epochs.channel_names;
  std::set<int> classes(epochs.labels.begin(), epochs.labels.end());
  for (int cls : classes) {
    out.trials.push_back(epochs.class_mean(cls));
    out.labels.push_back(cls);
  }
  return out;
}

EpochSet restrict_classes(const EpochSet& epochs, const std::set<int>& keep) {
  EpochSet out;
  out.fs_hz = epochs.fs_hz;
  out.channel_names = epochs.channel_names;
  for (int i = 0; i < epochs.n_trials(); ++i) {
    if (keep.count(epochs.labels[i])) {
      out.trials.push_back(epochs.trials[i]);
      out.labels.push_back(epochs.labels[i]);
    }
  }
  return out;
}

struct SimulatedWorld {
  Codebook calib_cb, test_cb;
  EpochSet target_calib, target_test;
  std::vector<SourceSubject> sources;
};

PopulationSpec population_spec(const PipelineConfig& c) {
  PopulationSpec spec;
  spec.n_subjects = c.n_source_subjects + 1;  // subject 0 is the target
  spec.n_channels = c.n_channels;
  spec.fs_hz = c.run.fs_hz;
  spec.tau_min_s = c.run.tau_min_s;
  spec.tau_max_s = c.run.tau_max_s;
  spec.amplitude_jitter = c.amplitude_jitter;
  spec.latency_jitter_s = c.latency_jitter_s;
  spec.pattern_jitter = c.pattern_jitter;
  spec.nonlinearity_gain = c.nonlinearity_gain;
  return spec;
}

Codebook design_calib(const PipelineConfig& c) {
  if (c.calib_codebook_path) {
    if (!fs::exists(*c.calib_codebook_path))
      throw MissingInput("design", "calibration codebook not found: " +
                                       c.calib_codebook_path->string());
    return read_codebook(*c.calib_codebook_path);
  }
  return generate_wn_pool(c.calib_classes, c.frames_per_trial, c.run.seed * 2654435761ull + 1);
}

Codebook design_test(const PipelineConfig& c) {
  if (c.test_codebook_path) {
    if (!fs::exists(*c.test_codebook_path))
      throw MissingInput("design",
                         "test codebook not found: " + c.test_codebook_path->string());
    return read_codebook(*c.test_codebook_path);
  }
  Codebook pool = generate_wn_pool(c.pool_size, c.frames_per_trial, c.run.seed * 2654435761ull + 2);
  AnnealSchedule schedule;
  schedule.seed = c.run.seed * 2654435761ull + 3;
  Codebook selected = select_codes(pool, c.test_classes, schedule);
  if (c.layout_rows * c.layout_cols == selected.n_classes()) {
    AnnealSchedule layout_schedule = schedule;
    layout_schedule.seed = c.run.seed * 2654435761ull + 4;
    selected = optimize_layout(selected, c.layout_rows, c.layout_cols, layout_schedule);
  }
  return selected;
}

SimulatedWorld simulate_world(const PipelineConfig& c, const Codebook& calib_cb,
                              const Codebook& test_cb) {
  SimulatedWorld world;
  world.calib_cb = calib_cb;
  world.test_cb = test_cb;

  auto population = make_population(population_spec(c), c.run.seed);
  for (auto& subject : population)
    subject = with_source_snr_db(subject, calib_cb, c.snr_db, c.calib_duration_s, c.run.fs_hz);

  const auto& target = population.front();
  world.target_calib = simulate_epochs(target, calib_cb, c.calib_trials_per_class,
                                       c.calib_duration_s, c.run.fs_hz);
  world.target_test = simulate_epochs(target, test_cb, c.test_trials_per_class,
                                      c.test_duration_s, c.run.fs_hz);

  for (size_t s = 1; s < population.size(); ++s) {
    const auto& subject = population[s];
    const EpochSet calib = simulate_epochs(subject, calib_cb, c.calib_trials_per_class,
                                           c.calib_duration_s, c.run.fs_hz);
    const EpochSet test = simulate_epochs(subject, test_cb, c.source_test_trials_per_class,
                                          c.test_duration_s, c.run.fs_hz);
    SourceSubject src;
    src.subject_id = subject.subject_id;
    src.calib_responses = class_mean_set(calib);
    src.test_responses = class_mean_set(test);
    const TdcaModel model = fit_tdca(calib, 1);
    src.filter_v = model.filters.col(0);
    world.sources.push_back(std::move(src));
  }
  return world;
}

struct Evaluation {
  double accuracy_linear = 0.0, itr_linear = 0.0;
  double accuracy_transfer = 0.0, itr_transfer = 0.0;
  double mutual_info = 0.0;
  BatchDecode linear_batch, transfer_batch;
  TdcaModel model;
  Trf trf;
};

Evaluation evaluate_world(const PipelineConfig& c, const SimulatedWorld& world) {
  const double fs = c.run.fs_hz;
  const auto fb = default_filterbank(c.run.n_filterbanks, fs);

  const TdcaModel model = fit_tdca(world.target_calib, c.run.n_spatial_components);
  const EpochSet calib_sources = spatial_filter(world.target_calib, model);
  const Trf trf = fit_trf_from_sources(calib_sources, world.calib_cb, c.run.svd_alpha,
                                       c.run.tau_min_s, c.run.tau_max_s);

  Evaluation ev;
  ev.model = model;
  ev.trf = trf;
  {
    const int window = static_cast<int>(std::lround(c.linear_window_s * fs));
    const TemplateBank bank =
        build_linear_templates(trf, world.test_cb, fs, c.linear_window_s, fb,
                               c.run.fb_weight_a, c.run.fb_weight_b, c.run.n_shifts);
    ev.linear_batch = batch_decode(world.target_test.truncated(window), model, bank);
    ev.accuracy_linear = ev.linear_batch.accuracy.value_or(0.0);
    ev.itr_linear = itr_bpm(world.test_cb.n_classes(), ev.accuracy_linear,
                            c.linear_window_s + c.run.gaze_shift_s);
  }
  {
    const int window = static_cast<int>(std::lround(c.transfer_window_s * fs));
    const TransferWeights weights =
        fit_weights(world.target_calib, model.filters.col(0), world.sources);
    std::vector<SourceSubject> truncated_sources = world.sources;
    for (auto& src : truncated_sources)
      src.test_responses = src.test_responses.truncated(window);
    const TemplateBank bank =
        build_transfer_templates(weights, truncated_sources, world.test_cb.n_classes(), fb,
                                 c.run.fb_weight_a, c.run.fb_weight_b, c.run.n_shifts);
    ev.transfer_batch = batch_decode(world.target_test.truncated(window), model, bank);
    ev.accuracy_transfer = ev.transfer_batch.accuracy.value_or(0.0);
    ev.itr_transfer = itr_bpm(world.test_cb.n_classes(), ev.accuracy_transfer,
                              c.transfer_window_s + c.run.gaze_shift_s);
  }
  {
    // Spectral report on the first calibration class.
    const EpochSet one_class = restrict_classes(calib_sources, {0});
    const auto report = snr_spectrum(one_class, std::min(125.0, fs / 2.0));
    ev.mutual_info = report.mutual_info_bits_per_s;
  }
  return ev;
}

json batch_to_json(const BatchDecode& batch, const std::vector<int>& labels) {
  json j;
  j["predictions"] = batch.predictions;
  j["labels"] = labels;
  if (batch.accuracy) j["accuracy"] = *batch.accuracy;
  json trials = json::array();
  for (size_t i = 0; i < batch.results.size(); ++i) {
    json t;
    t["predicted_class"] = batch.results[i].predicted_class;
    t["best_shift"] = batch.results[i].best_shift;
    t["flagged"] = static_cast<bool>(batch.flagged[i]);
    json scores = json::array();
    const auto& m = batch.results[i].scores;
    for (int r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (int col = 0; col < m.cols(); ++col) row.push_back(m(r, col));
      scores.push_back(std::move(row));
    }
    t["scores"] = std::move(scores);
    trials.push_back(std::move(t));
  }
  j["trials"] = std::move(trials);
  return j;
}

}  // namespace

int run_pipeline(const fs::path& config_path, const fs::path& workspace, bool force) {
  std::string stage = "config";
  try {
    const PipelineConfig config = load_pipeline_config(config_path);
    fs::create_directories(workspace);
    fs::create_directories(workspace / "sources");

    std::string raw;
    {
      std::ifstream in(config_path);
      raw.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    const std::string config_hash = string_hash(raw);

    const fs::path manifest_path = workspace / "manifest.json";
    json manifest;
    if (fs::exists(manifest_path)) {
      std::ifstream(manifest_path) >> manifest;
      if (manifest.value("config_hash", "") != config_hash) {
        if (!force)
          throw InvariantViolation(
              "workspace holds outputs of a different config; rerun with --force");
        manifest = json::object();
      }
    }
    manifest["config_hash"] = config_hash;
    auto stage_done = [&](const std::string& name, const std::vector<fs::path>& outputs) {
      if (!manifest.contains("stages") || !manifest["stages"].contains(name)) return false;
      for (const auto& p : outputs)
        if (!fs::exists(p)) return false;
      return true;
    };
    auto mark_stage = [&](const std::string& name, const std::vector<fs::path>& outputs) {
      json names = json::array();
      for (const auto& p : outputs)
        names.push_back(fs::relative(p, workspace).generic_string());
      manifest["stages"][name] = names;
      std::ofstream(manifest_path) << manifest.dump(2) << '\n';
    };

    stage = "design";
    const fs::path calib_cb_path = workspace / "calib.codebook.json";
    const fs::path test_cb_path = workspace / "test.codebook.json";
    if (!stage_done(stage, {calib_cb_path, test_cb_path})) {
      write_codebook(calib_cb_path, design_calib(config));
      write_codebook(test_cb_path, design_test(config));
      mark_stage(stage, {calib_cb_path, test_cb_path});
    }
    const Codebook calib_cb = read_codebook(calib_cb_path);
    const Codebook test_cb = read_codebook(test_cb_path);

    stage = "simulate";
    const fs::path target_calib_path = workspace / "target_calib.cvep";
    const fs::path target_test_path = workspace / "target_test.cvep";
    std::vector<fs::path> sim_outputs{target_calib_path, target_test_path};
    for (int s = 0; s < config.n_source_subjects; ++s) {
      const std::string base = "s" + std::to_string(s + 1);
      sim_outputs.push_back(workspace / "sources" / (base + ".calib.cvep"));
      sim_outputs.push_back(workspace / "sources" / (base + ".test.cvep"));
      sim_outputs.push_back(workspace / "sources" / (base + ".filter.json"));
    }
    SimulatedWorld world;
    if (!stage_done(stage, sim_outputs)) {
      world = simulate_world(config, calib_cb, test_cb);
      write_epochs(target_calib_path, world.target_calib);
      write_epochs(target_test_path, world.target_test);
      for (size_t s = 0; s < world.sources.size(); ++s) {
        const std::string base = "s" + std::to_string(s + 1);
        write_epochs(workspace / "sources" / (base + ".calib.cvep"),
                     world.sources[s].calib_responses);
        write_epochs(workspace / "sources" / (base + ".test.cvep"),
                     world.sources[s].test_responses);
        json fj;
        fj["subject_id"] = world.sources[s].subject_id;
        fj["filter"] = std::vector<double>(
            world.sources[s].filter_v.data(),
            world.sources[s].filter_v.data() + world.sources[s].filter_v.size());
        std::ofstream(workspace / "sources" / (base + ".filter.json")) << fj.dump(2) << '\n';
      }
      mark_stage(stage, sim_outputs);
    } else {
      world.calib_cb = calib_cb;
      world.test_cb = test_cb;
      world.target_calib = read_epochs(target_calib_path);
      world.target_test = read_epochs(target_test_path);
      for (int s = 0; s < config.n_source_subjects; ++s) {
        const std::string base = "s" + std::to_string(s + 1);
        SourceSubject src;
        src.calib_responses = read_epochs(workspace / "sources" / (base + ".calib.cvep"));
        src.test_responses = read_epochs(workspace / "sources" / (base + ".test.cvep"));
        json fj;
        std::ifstream(workspace / "sources" / (base + ".filter.json")) >> fj;
        src.subject_id = fj.at("subject_id").get<int>();
        const auto v = fj.at("filter").get<std::vector<double>>();
        src.filter_v = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
        world.sources.push_back(std::move(src));
      }
    }

    stage = "evaluate";
    const Evaluation ev = evaluate_world(config, world);
    write_tdca_model(workspace / "model.json", ev.model);
    write_trf(workspace / "trf.json", ev.trf);

    std::ofstream(workspace / "results_linear.json")
        << batch_to_json(ev.linear_batch, world.target_test.labels).dump() << '\n';
    std::ofstream(workspace / "results_transfer.json")
        << batch_to_json(ev.transfer_batch, world.target_test.labels).dump() << '\n';

    stage = "report";
    json report;
    report["config_hash"] = config_hash;
    report["seed"] = config.run.seed;
    report["name"] = config.name;
    json stages = json::array();
    for (const auto& [name, outputs] : manifest["stages"].items()) {
      json s;
      s["name"] = name;
      json outs = json::array();
      for (const auto& o : outputs) {
        const fs::path p = workspace / o.get<std::string>();
        json entry;
        entry["file"] = o.get<std::string>();
        entry["hash"] = fs::exists(p) ? file_hash(p) : "";
        outs.push_back(std::move(entry));
      }
      s["outputs"] = std::move(outs);
      stages.push_back(std::move(s));
    }
    report["stages"] = std::move(stages);

    json metrics;
    metrics["linear"]["accuracy"] = ev.accuracy_linear;
    metrics["linear"]["itr_bpm"] = ev.itr_linear;
    metrics["linear"]["window_s"] = config.linear_window_s;
    metrics["transfer"]["accuracy"] = ev.accuracy_transfer;
    metrics["transfer"]["itr_bpm"] = ev.itr_transfer;
    metrics["transfer"]["window_s"] = config.transfer_window_s;
    metrics["calibration"]["mutual_info_bits_per_s"] = ev.mutual_info;
    report["metrics"] = std::move(metrics);

    std::ofstream(workspace / "report.json") << report.dump(2) << '\n';
    return 0;
  } catch (const MissingInput& e) {
    std::cerr << "missing input in stage " << e.stage() << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "failed in stage " << stage << ": " << e.what() << '\n';
    return 3;
  }
}

std::vector<SweepRow> calibration_sweep(const PipelineConfig& config,
                                        const std::vector<double>& durations_s) {
  const double fs = config.run.fs_hz;
  const auto fb = default_filterbank(config.run.n_filterbanks, fs);
  const Codebook calib_cb = design_calib(config);
  const Codebook test_cb = design_test(config);
  const SimulatedWorld world = simulate_world(config, calib_cb, test_cb);
  const int n_cls = calib_cb.n_classes();
  const int reps = config.calib_trials_per_class;

  std::vector<SweepRow> rows;
  for (double duration : durations_s) {
    const int budget = static_cast<int>(std::floor(duration / config.calib_duration_s));
    if (budget < 2 || budget > n_cls * reps)
      throw ArgumentError("calibration duration outside the available data");

    // Repetition-major order: every class once before any repeats.
    EpochSet subset;
    subset.fs_hz = world.target_calib.fs_hz;
    subset.channel_names = world.target_calib.channel_names;
    std::set<int> kept_classes;
    for (int i = 0; i < budget; ++i) {
      const int rep = i / n_cls;
      const int cls = i % n_cls;
      const int idx = cls * reps + rep;  // trials are class-major
      subset.trials.push_back(world.target_calib.trials[idx]);
      subset.labels.push_back(cls);
      kept_classes.insert(cls);
    }
    const std::set<int> classes = kept_classes;

    Codebook calib_subset;
    calib_subset.kind = calib_cb.kind;
    for (int cls : classes) calib_subset.sequences.push_back(calib_cb.sequences[cls]);
    for (size_t i = 0; i < calib_subset.sequences.size(); ++i)
      calib_subset.sequences[i].class_id = static_cast<int>(i);

    // Relabel the subset to match the renumbered codebook.
    EpochSet relabeled = subset;
    {
      int next = 0;
      std::vector<int> remap(n_cls, -1);
      for (int cls : classes) remap[cls] = next++;
      for (auto& l : relabeled.labels) l = remap[l];
    }

    const TdcaModel model = fit_tdca(relabeled, config.run.n_spatial_components);
    const EpochSet sources = spatial_filter(relabeled, model);
    const Trf trf = fit_trf_from_sources(sources, calib_subset, config.run.svd_alpha,
                                         config.run.tau_min_s, config.run.tau_max_s);

    SweepRow row;
    row.duration_s = duration;
    {
      const int window = static_cast<int>(std::lround(config.linear_window_s * fs));
      const TemplateBank bank =
          build_linear_templates(trf, test_cb, fs, config.linear_window_s, fb,
                                 config.run.fb_weight_a, config.run.fb_weight_b,
                                 config.run.n_shifts);
      const auto batch = batch_decode(world.target_test.truncated(window), model, bank);
      row.accuracy_linear = batch.accuracy.value_or(0.0);
      row.itr_linear = itr_bpm(test_cb.n_classes(), row.accuracy_linear,
                               config.linear_window_s + config.run.gaze_shift_s);
    }
    {
      const int window = static_cast<int>(std::lround(config.transfer_window_s * fs));
      std::vector<SourceSubject> sources_subset = world.sources;
      for (auto& src : sources_subset) {
        src.calib_responses = restrict_classes(src.calib_responses, classes);
        src.test_responses = src.test_responses.truncated(window);
      }
      // fit_weights compares raw class ids, so keep the original labels here.
      const TransferWeights weights =
          fit_weights(subset, model.filters.col(0), sources_subset);
      const TemplateBank bank = build_transfer_templates(
          weights, sources_subset, test_cb.n_classes(), fb, config.run.fb_weight_a,
          config.run.fb_weight_b, config.run.n_shifts);
      const auto batch = batch_decode(world.target_test.truncated(window), model, bank);
      row.accuracy_transfer = batch.accuracy.value_or(0.0);
      row.itr_transfer = itr_bpm(test_cb.n_classes(), row.accuracy_transfer,
                                 config.transfer_window_s + config.run.gaze_shift_s);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cvep
