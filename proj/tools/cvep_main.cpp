#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cvep/decoder.hpp"
#include "cvep/errors.hpp"
#include "cvep/io.hpp"
#include "cvep/metrics.hpp"
#include "cvep/pipeline.hpp"
#include "cvep/preprocess.hpp"
#include "cvep/stimulus.hpp"
#include "cvep/synth.hpp"
#include "cvep/tdca.hpp"
#include "cvep/transfer.hpp"
#include "cvep/trf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

cvep::RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return cvep::RunConfig{};
  return cvep::read_config(path);
}

std::vector<cvep::SourceSubject> load_sources(const fs::path& dir) {
  std::vector<cvep::SourceSubject> sources;
  for (int s = 1;; ++s) {
    const std::string base = "s" + std::to_string(s);
    const fs::path calib = dir / (base + ".calib.cvep");
    if (!fs::exists(calib)) break;
    cvep::SourceSubject src;
    src.calib_responses = cvep::read_epochs(calib);
    src.test_responses = cvep::read_epochs(dir / (base + ".test.cvep"));
    json fj;
    std::ifstream(dir / (base + ".filter.json")) >> fj;
    src.subject_id = fj.at("subject_id").get<int>();
    const auto v = fj.at("filter").get<std::vector<double>>();
    src.filter_v = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    sources.push_back(std::move(src));
  }
  if (sources.empty()) throw cvep::ArgumentError("no source archives under " + dir.string());
  return sources;
}

json results_to_json(const cvep::BatchDecode& batch, const std::vector<int>& labels,
                     int n_classes, double window_s) {
  json j;
  j["n_classes"] = n_classes;
  j["window_s"] = window_s;
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
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      scores.push_back(std::move(row));
    }
    t["scores"] = std::move(scores);
    trials.push_back(std::move(t));
  }
  j["trials"] = std::move(trials);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cVEP/SSVEP decoding toolkit"};
  app.require_subcommand(1);

  try {
    // ---- design ----------------------------------------------------------
    auto* design = app.add_subcommand("design", "generate stimulation codebooks");
    struct {
      int pool = 10000, frames = 180, select = 0;
      std::string layout, kind = "wn", out = "codebook.json";
      std::uint64_t seed = 1;
    } d;
    design->add_option("--pool", d.pool, "WN pool size");
    design->add_option("--frames", d.frames, "frames per code");
    design->add_option("--select", d.select, "subset size chosen by annealing");
    design->add_option("--layout", d.layout, "grid RxC layout optimization");
    design->add_option("--kind", d.kind, "wn or jfpm");
    design->add_option("--seed", d.seed, "rng seed");
    design->add_option("-o,--out", d.out, "output codebook path")->required();
    design->callback([&] {
      cvep::Codebook cb;
      if (d.kind == "jfpm") {
        cvep::JfpmSpec spec;
        spec.n_targets = d.select > 0 ? d.select : spec.n_targets;
        cb = cvep::generate_jfpm(spec, d.frames);
      } else {
        cb = cvep::generate_wn_pool(d.pool, d.frames, d.seed);
        if (d.select > 0) {
          cvep::AnnealSchedule schedule;
          schedule.seed = d.seed;
          cb = cvep::select_codes(cb, d.select, schedule);
        }
      }
      if (!d.layout.empty()) {
        int rows = 0, cols = 0;
        char x = 0;
        std::istringstream(d.layout) >> rows >> x >> cols;
        cvep::AnnealSchedule schedule;
        schedule.seed = d.seed + 1;
        cb = cvep::optimize_layout(cb, rows, cols, schedule);
      }
      cvep::write_codebook(d.out, cb);
      std::cout << "wrote " << d.out << " (" << cb.n_classes() << " classes)\n";
    });

    // ---- simulate --------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "generate synthetic EEG");
    struct {
      std::string population, codebook, out = "data";
      int trials = 4;
      double duration = 3.0, snr_db = 0.0;
      std::uint64_t seed = 1;
    } sim;
    simulate->add_option("--population", sim.population, "PopulationSpec JSON (optional)");
    simulate->add_option("--codebook", sim.codebook, "codebook path")->required();
    simulate->add_option("--trials", sim.trials, "trials per class");
    simulate->add_option("--duration", sim.duration, "trial seconds");
    simulate->add_option("--snr-db", sim.snr_db, "source SNR in dB");
    simulate->add_option("--seed", sim.seed, "rng seed");
    simulate->add_option("-o,--out", sim.out, "output directory")->required();
    simulate->callback([&] {
      cvep::PopulationSpec spec;
      if (!sim.population.empty()) {
        json pj;
        std::ifstream(sim.population) >> pj;
        spec.n_subjects = pj.value("n_subjects", spec.n_subjects);
        spec.n_channels = pj.value("n_channels", spec.n_channels);
        spec.fs_hz = pj.value("fs_hz", spec.fs_hz);
        spec.amplitude_jitter = pj.value("amplitude_jitter", spec.amplitude_jitter);
        spec.latency_jitter_s = pj.value("latency_jitter_s", spec.latency_jitter_s);
        spec.pattern_jitter = pj.value("pattern_jitter", spec.pattern_jitter);
        spec.nonlinearity_gain = pj.value("nonlinearity_gain", spec.nonlinearity_gain);
      }
      const auto cb = cvep::read_codebook(sim.codebook);
      fs::create_directories(sim.out);
      auto subjects = cvep::make_population(spec, sim.seed);
      for (auto& subject : subjects) {
        subject = cvep::with_source_snr_db(subject, cb, sim.snr_db, sim.duration, spec.fs_hz);
        const auto epochs =
            cvep::simulate_epochs(subject, cb, sim.trials, sim.duration, spec.fs_hz);
        const fs::path out =
            fs::path(sim.out) / ("subject" + std::to_string(subject.subject_id) + ".cvep");
        cvep::write_epochs(out, epochs);
        std::cout << "wrote " << out.string() << "\n";
      }
    });

    // ---- preprocess ------------------------------------------------------
    auto* preprocess = app.add_subcommand("preprocess", "notch / downsample / filter bank");
    struct {
      std::string in, out = "out";
      bool notch = false;
      int downsample = 1;
      std::string fb;
    } pp;
    preprocess->add_option("input", pp.in, "input .cvep")->required();
    preprocess->add_flag("--notch", pp.notch, "50 Hz notch");
    preprocess->add_option("--downsample", pp.downsample, "integer decimation factor");
    preprocess->add_option("--fb", pp.fb, "'default' or n_bands for band decomposition");
    preprocess->add_option("-o,--out", pp.out, "output directory")->required();
    preprocess->callback([&] {
      auto epochs = cvep::read_epochs(pp.in);
      if (pp.downsample > 1) epochs = cvep::downsample(epochs, pp.downsample);
      if (pp.notch) epochs = cvep::notch_50hz(epochs);
      fs::create_directories(pp.out);
      if (!pp.fb.empty()) {
        const int n_bands = pp.fb == "default" ? 5 : std::stoi(pp.fb);
        const auto spec = cvep::default_filterbank(n_bands, epochs.fs_hz);
        const auto bands = cvep::filterbank(epochs, spec);
        for (size_t b = 0; b < bands.size(); ++b) {
          const fs::path out = fs::path(pp.out) / ("band" + std::to_string(b + 1) + ".cvep");
          cvep::write_epochs(out, bands[b]);
          std::cout << "wrote " << out.string() << "\n";
        }
      } else {
        const fs::path out = fs::path(pp.out) / "processed.cvep";
        cvep::write_epochs(out, epochs);
        std::cout << "wrote " << out.string() << "\n";
      }
    });

    // ---- fit-spatial -----------------------------------------------------
    auto* fit_spatial = app.add_subcommand("fit-spatial", "TDCA spatial filter");
    struct {
      std::string in, out = "model.json";
      int components = 1;
      double ridge = 1e-6;
    } fsp;
    fit_spatial->add_option("input", fsp.in, "calibration .cvep")->required();
    fit_spatial->add_option("--components", fsp.components, "spatial components");
    fit_spatial->add_option("--ridge", fsp.ridge, "ridge epsilon");
    fit_spatial->add_option("-o,--out", fsp.out, "output model path")->required();
    fit_spatial->callback([&] {
      const auto epochs = cvep::read_epochs(fsp.in);
      const auto model = cvep::fit_tdca(epochs, fsp.components, fsp.ridge);
      cvep::write_tdca_model(fsp.out, model);
      std::cout << "wrote " << fsp.out << " (top eigenvalue " << model.eigenvalues(0) << ")\n";
    });

    // ---- fit-trf ---------------------------------------------------------
    auto* fit_trf_cmd = app.add_subcommand("fit-trf", "temporal response function");
    struct {
      std::string calib, model, codebook, out = "trf.json";
      double alpha = 0.9, tau_min = 0.0, tau_max = 0.5;
    } ft;
    fit_trf_cmd->add_option("calib", ft.calib, "calibration .cvep")->required();
    fit_trf_cmd->add_option("model", ft.model, "TDCA model JSON")->required();
    fit_trf_cmd->add_option("codebook", ft.codebook, "calibration codebook")->required();
    fit_trf_cmd->add_option("--alpha", ft.alpha, "eigenvalue truncation fraction");
    fit_trf_cmd->add_option("--tau-min", ft.tau_min, "lag window start (s)");
    fit_trf_cmd->add_option("--tau-max", ft.tau_max, "lag window end (s)");
    fit_trf_cmd->add_option("-o,--out", ft.out, "output TRF path")->required();
    fit_trf_cmd->callback([&] {
      const auto epochs = cvep::read_epochs(ft.calib);
      const auto model = cvep::read_tdca_model(ft.model);
      const auto cb = cvep::read_codebook(ft.codebook);
      const auto sources = cvep::spatial_filter(epochs, model);
      const auto trf =
          cvep::fit_trf_from_sources(sources, cb, ft.alpha, ft.tau_min, ft.tau_max);
      cvep::write_trf(ft.out, trf);
      std::cout << "wrote " << ft.out << " (rank " << trf.retained_rank << "/"
                << trf.n_taps() << ")\n";
    });

    // ---- make-templates --------------------------------------------------
    auto* templates = app.add_subcommand("make-templates", "linear-model template bank");
    struct {
      std::string trf, codebook, config, out = "bank.json";
      double duration = 3.0;
      bool ssvep = false;
    } mt;
    templates->add_option("trf", mt.trf, "TRF JSON")->required();
    templates->add_option("codebook", mt.codebook, "test codebook")->required();
    templates->add_option("--duration", mt.duration, "template seconds");
    templates->add_option("--config", mt.config, "RunConfig JSON");
    templates->add_flag("--ssvep", mt.ssvep, "band-pass the TRF to 8-15.8 Hz first");
    templates->add_option("-o,--out", mt.out, "output bank path")->required();
    templates->callback([&] {
      const auto trf = cvep::read_trf(mt.trf);
      const auto cb = cvep::read_codebook(mt.codebook);
      const auto run = load_run_config(mt.config);
      const auto fb = cvep::default_filterbank(run.n_filterbanks, trf.fs_hz);
      const auto bank =
          mt.ssvep ? cvep::reconstruct_ssvep_templates(trf, cb, trf.fs_hz, mt.duration, fb,
                                                       run.fb_weight_a, run.fb_weight_b,
                                                       run.n_shifts)
                   : cvep::build_linear_templates(trf, cb, trf.fs_hz, mt.duration, fb,
                                                  run.fb_weight_a, run.fb_weight_b,
                                                  run.n_shifts);
      cvep::write_template_bank(mt.out, bank);
      std::cout << "wrote " << mt.out << " (" << bank.n_classes() << " x "
                << bank.n_bands() << " templates)\n";
    });

    // ---- fit-transfer ----------------------------------------------------
    auto* fit_transfer = app.add_subcommand("fit-transfer", "cross-subject template bank");
    struct {
      std::string target, model, sources, config, out = "bank.json";
      double window = 0.0;
    } tr;
    fit_transfer->add_option("--target", tr.target, "target calibration .cvep")->required();
    fit_transfer->add_option("--target-model", tr.model, "target TDCA model")->required();
    fit_transfer->add_option("--sources", tr.sources, "source archive directory")->required();
    fit_transfer->add_option("--config", tr.config, "RunConfig JSON");
    fit_transfer->add_option("--window", tr.window, "template seconds (0 = full)");
    fit_transfer->add_option("-o,--out", tr.out, "output bank path")->required();
    fit_transfer->callback([&] {
      const auto calib = cvep::read_epochs(tr.target);
      const auto model = cvep::read_tdca_model(tr.model);
      auto sources = load_sources(tr.sources);
      const auto run = load_run_config(tr.config);
      const auto weights = cvep::fit_weights(calib, model.filters.col(0), sources);
      if (tr.window > 0.0) {
        const int keep = static_cast<int>(tr.window * sources.front().test_responses.fs_hz);
        for (auto& src : sources) src.test_responses = src.test_responses.truncated(keep);
      }
      const int n_classes = sources.front().test_responses.n_classes();
      const auto fb =
          cvep::default_filterbank(run.n_filterbanks, sources.front().test_responses.fs_hz);
      const auto bank = cvep::build_transfer_templates(weights, sources, n_classes, fb,
                                                       run.fb_weight_a, run.fb_weight_b,
                                                       run.n_shifts);
      cvep::write_template_bank(tr.out, bank);
      std::cout << "wrote " << tr.out << " (weights:";
      for (int i = 0; i < weights.w.size(); ++i) std::cout << ' ' << weights.w(i);
      std::cout << ")\n";
    });

    // ---- decode ----------------------------------------------------------
    auto* decode = app.add_subcommand("decode", "filter-bank template matching");
    struct {
      std::string in, model, bank, out = "results.json";
      int shifts = -1, jobs = 1;
    } dc;
    decode->add_option("input", dc.in, "test .cvep")->required();
    decode->add_option("--model", dc.model, "TDCA model JSON")->required();
    decode->add_option("--bank", dc.bank, "template bank JSON")->required();
    decode->add_option("--shifts", dc.shifts, "override the bank's shift budget");
    decode->add_option("--jobs", dc.jobs, "worker threads");
    decode->add_option("-o,--out", dc.out, "output results path")->required();
    decode->callback([&] {
      const auto epochs = cvep::read_epochs(dc.in);
      const auto model = cvep::read_tdca_model(dc.model);
      auto bank = cvep::read_template_bank(dc.bank);
      if (dc.shifts >= 0) bank.n_shifts = dc.shifts;
      const int window = std::min(epochs.n_samples(), bank.n_samples());
      const auto batch = cvep::batch_decode(epochs.truncated(window), model, bank, dc.jobs);
      std::ofstream(dc.out) << results_to_json(batch, epochs.labels, bank.n_classes(),
                                               window / epochs.fs_hz)
                                   .dump()
                            << '\n';
      std::cout << "wrote " << dc.out;
      if (batch.accuracy) std::cout << " (accuracy " << *batch.accuracy << ")";
      std::cout << "\n";
    });

    // ---- eval ------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "accuracy / ITR / SNR / MI report");
    struct {
      std::string results, sources, out = "report.json";
      bool itr = false, snr = false;
      double mi_k = 125.0, gaze = 0.5;
    } ev;
    eval->add_option("results", ev.results, "decode results JSON")->required();
    eval->add_flag("--itr", ev.itr, "add ITR");
    eval->add_flag("--snr", ev.snr, "add spectral SNR / MI (needs --sources)");
    eval->add_option("--sources", ev.sources, "filtered one-class source .cvep");
    eval->add_option("--mi-k", ev.mi_k, "MI upper frequency (Hz)");
    eval->add_option("--gaze", ev.gaze, "gaze shift seconds for ITR");
    eval->add_option("-o,--out", ev.out, "output report path")->required();
    eval->callback([&] {
      json in;
      std::ifstream(ev.results) >> in;
      json out;
      const auto labels = in.at("labels").get<std::vector<int>>();
      const auto predictions = in.at("predictions").get<std::vector<int>>();
      const auto [confusion, accuracy] = cvep::confusion_and_accuracy(labels, predictions);
      out["accuracy"] = accuracy;
      if (ev.itr) {
        const int m = in.at("n_classes").get<int>();
        const double window = in.at("window_s").get<double>();
        out["itr_bpm"] = cvep::itr_bpm(m, accuracy, window + ev.gaze);
        out["selection_time_s"] = window + ev.gaze;
      }
      if (ev.snr) {
        const auto sources = cvep::read_epochs(ev.sources);
        const auto report = cvep::snr_spectrum(sources, ev.mi_k);
        out["snr"]["freqs_hz"] = report.freqs_hz;
        out["snr"]["snr"] = report.snr;
        out["snr"]["mutual_info_bits_per_s"] = report.mutual_info_bits_per_s;
        out["snr"]["upper_limit_hz"] = report.upper_limit_hz;
      }
      std::ofstream(ev.out) << out.dump(2) << '\n';
      std::cout << "wrote " << ev.out << " (accuracy " << accuracy << ")\n";
    });

    // ---- onset-scan ------------------------------------------------------
    auto* onset = app.add_subcommand("onset-scan", "asynchronous onset detection");
    struct {
      std::string in, bank, out = "scan.json";
      int onset = 0;
      double lo = -100.0, hi = 100.0;
    } os;
    onset->add_option("input", os.in, "continuous source .cvep (1 trial, 1 channel)")
        ->required();
    onset->add_option("--bank", os.bank, "template bank JSON")->required();
    onset->add_option("--onset", os.onset, "nominal onset sample");
    onset->add_option("--range-lo", os.lo, "scan start (ms)");
    onset->add_option("--range-hi", os.hi, "scan end (ms)");
    onset->add_option("-o,--out", os.out, "output path")->required();
    onset->callback([&] {
      const auto epochs = cvep::read_epochs(os.in);
      if (epochs.n_trials() != 1 || epochs.n_channels() != 1)
        throw cvep::ArgumentError("expected a single continuous source trial");
      std::vector<double> source(epochs.n_samples());
      for (int t = 0; t < epochs.n_samples(); ++t) source[t] = epochs.trials[0](0, t);
      const auto bank = cvep::read_template_bank(os.bank);
      const auto scan = cvep::onset_scan(source, epochs.fs_hz, bank, os.onset, os.lo, os.hi);
      json j;
      j["shifts_ms"] = scan.shifts_ms;
      j["type1_error"] = scan.type1_error;
      j["detected_shift_ms"] = scan.detected_shift_ms;
      std::ofstream(os.out) << j.dump(2) << '\n';
      std::cout << "wrote " << os.out << " (detected shift " << scan.detected_shift_ms
                << " ms)\n";
    });

    // ---- sweep -----------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "calibration duration sweep");
    struct {
      std::string config, out = "sweep.json";
      std::vector<double> durations{9, 18, 27, 36, 45, 54, 60};
    } sw;
    sweep->add_option("--config", sw.config, "pipeline config JSON")->required();
    sweep->add_option("--durations", sw.durations, "calibration seconds");
    sweep->add_option("-o,--out", sw.out, "output path")->required();
    sweep->callback([&] {
      const auto config = cvep::load_pipeline_config(sw.config);
      const auto rows = cvep::calibration_sweep(config, sw.durations);
      json j = json::array();
      std::cout << "calib_s  acc_lin  itr_lin  acc_tr  itr_tr\n";
      for (const auto& r : rows) {
        json row;
        row["duration_s"] = r.duration_s;
        row["accuracy_linear"] = r.accuracy_linear;
        row["itr_linear"] = r.itr_linear;
        row["accuracy_transfer"] = r.accuracy_transfer;
        row["itr_transfer"] = r.itr_transfer;
        j.push_back(std::move(row));
        std::printf("%7.1f  %7.3f  %7.2f  %6.3f  %6.2f\n", r.duration_s, r.accuracy_linear,
                    r.itr_linear, r.accuracy_transfer, r.itr_transfer);
      }
      std::ofstream(sw.out) << j.dump(2) << '\n';
      std::cout << "wrote " << sw.out << "\n";
    });

    // ---- run -------------------------------------------------------------
    auto* run = app.add_subcommand("run", "execute a pipeline config");
    struct {
      std::string config, workspace = "ws";
      bool force = false;
    } rn;
    run->add_option("--config", rn.config, "pipeline config JSON")->required();
    run->add_option("--workspace", rn.workspace, "output workspace directory");
    run->add_flag("--force", rn.force, "overwrite outputs from a different config");
    run->callback([&] {
      const int code = cvep::run_pipeline(rn.config, rn.workspace, rn.force);
      if (code != 0) throw CLI::RuntimeError(code);
      std::cout << "pipeline complete; see " << rn.workspace << "/report.json\n";
    });

    app.parse(argc, argv);
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const cvep::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const cvep::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
