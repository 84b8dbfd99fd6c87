#include "cvep/io.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

#include "cvep/errors.hpp"

namespace cvep {

using nlohmann::json;

namespace {

constexpr const char* kEpochMagic = "CVEP1";

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ArgumentError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw ArgumentError("cannot open for reading: " + path.string());
  return in;
}

json load_json(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

static_assert(std::endian::native == std::endian::little,
              "payload serialization assumes a little-endian host");

}  // namespace

void write_epochs(const std::filesystem::path& path, const EpochSet& epochs) {
  epochs.validate();
  json header;
  header["magic"] = kEpochMagic;
  header["n_trials"] = epochs.n_trials();
  header["n_channels"] = epochs.n_channels();
  header["n_samples"] = epochs.n_samples();
  header["fs_hz"] = epochs.fs_hz;
  header["labels"] = epochs.labels;
  header["channel_names"] = epochs.channel_names;
  header["byte_order"] = "LE";

  auto out = open_out(path, true);
  out << header.dump() << '\n';
  std::vector<float> row(epochs.n_samples());
  for (const auto& trial : epochs.trials)
    for (int c = 0; c < trial.rows(); ++c) {
      for (int t = 0; t < trial.cols(); ++t) row[t] = static_cast<float>(trial(c, t));
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
  if (!out) throw ArgumentError("short write: " + path.string());
}

EpochSet read_epochs(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  std::string header_line;
  if (!std::getline(in, header_line)) throw FormatError("missing header line");

  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::parse_error&) {
    throw FormatError("header is not valid JSON");
  }
  if (!header.contains("magic") || header["magic"] != kEpochMagic)
    throw FormatError("bad magic; expected CVEP1");
  if (header.value("byte_order", "LE") != "LE")
    throw FormatError("unsupported byte order");

  EpochSet epochs;
  const int n_trials = header.at("n_trials").get<int>();
  const int n_channels = header.at("n_channels").get<int>();
  const int n_samples = header.at("n_samples").get<int>();
  epochs.fs_hz = header.at("fs_hz").get<double>();
  epochs.labels = header.at("labels").get<std::vector<int>>();
  epochs.channel_names = header.value("channel_names", std::vector<std::string>{});
  if (n_trials < 0 || n_channels < 0 || n_samples < 0)
    throw FormatError("negative dimension in header");

  const std::size_t expected =
      static_cast<std::size_t>(n_trials) * n_channels * n_samples;
  std::vector<float> payload(expected);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(expected * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != expected * sizeof(float))
    throw CorruptPayload("payload shorter than the header dims");
  char extra;
  if (in.read(&extra, 1)) throw CorruptPayload("payload longer than the header dims");

  epochs.trials.reserve(n_trials);
  std::size_t idx = 0;
  for (int i = 0; i < n_trials; ++i) {
    Eigen::MatrixXd trial(n_channels, n_samples);
    for (int c = 0; c < n_channels; ++c)
      for (int t = 0; t < n_samples; ++t) trial(c, t) = payload[idx++];
    epochs.trials.push_back(std::move(trial));
  }
  epochs.validate();
  return epochs;
}

void write_codebook(const std::filesystem::path& path, const Codebook& codebook) {
  codebook.validate();
  json j;
  j["kind"] = codebook.kind == CodebookKind::kWhiteNoise ? "WN" : "JFPM";
  j["frame_rate_hz"] = codebook.frame_rate_hz();
  j["sequences"] = json::array();
  for (const auto& s : codebook.sequences) {
    json seq;
    seq["class_id"] = s.class_id;
    seq["frames"] = s.frames;
    j["sequences"].push_back(std::move(seq));
  }
  if (codebook.layout) {
    j["layout"]["rows"] = codebook.layout->rows;
    j["layout"]["cols"] = codebook.layout->cols;
    j["layout"]["cell_of_class"] = codebook.layout->cell_of_class;
  }
  open_out(path, false) << j.dump(2) << '\n';
}

Codebook read_codebook(const std::filesystem::path& path) {
  const json j = load_json(path);
  Codebook cb;
  const std::string kind = j.value("kind", "WN");
  cb.kind = kind == "JFPM" ? CodebookKind::kJfpm : CodebookKind::kWhiteNoise;
  const double rate = j.value("frame_rate_hz", 60.0);
  for (const auto& seq : j.at("sequences")) {
    StimulusSequence s;
    s.class_id = seq.at("class_id").get<int>();
    s.frames = seq.at("frames").get<std::vector<double>>();
    s.frame_rate_hz = rate;
    cb.sequences.push_back(std::move(s));
  }
  if (j.contains("layout")) {
    GridLayout layout;
    layout.rows = j["layout"].at("rows").get<int>();
    layout.cols = j["layout"].at("cols").get<int>();
    layout.cell_of_class = j["layout"].at("cell_of_class").get<std::vector<int>>();
    cb.layout = layout;
  }
  cb.validate();
  return cb;
}

void write_config(const std::filesystem::path& path, const RunConfig& c) {
  c.validate();
  json j;
  j["seed"] = c.seed;
  j["fs_hz"] = c.fs_hz;
  j["n_filterbanks"] = c.n_filterbanks;
  j["fb_weight_a"] = c.fb_weight_a;
  j["fb_weight_b"] = c.fb_weight_b;
  j["n_shifts"] = c.n_shifts;
  j["tau_min_s"] = c.tau_min_s;
  j["tau_max_s"] = c.tau_max_s;
  j["svd_alpha"] = c.svd_alpha;
  j["n_spatial_components"] = c.n_spatial_components;
  j["n_delay_embedding"] = c.n_delay_embedding;
  j["gaze_shift_s"] = c.gaze_shift_s;
  open_out(path, false) << j.dump(2) << '\n';
}

RunConfig read_config(const std::filesystem::path& path) {
  const json j = load_json(path);
  RunConfig c;
  c.seed = j.value("seed", c.seed);
  c.fs_hz = j.value("fs_hz", c.fs_hz);
  c.n_filterbanks = j.value("n_filterbanks", c.n_filterbanks);
  c.fb_weight_a = j.value("fb_weight_a", c.fb_weight_a);
  c.fb_weight_b = j.value("fb_weight_b", c.fb_weight_b);
  c.n_shifts = j.value("n_shifts", c.n_shifts);
  c.tau_min_s = j.value("tau_min_s", c.tau_min_s);
  c.tau_max_s = j.value("tau_max_s", c.tau_max_s);
  c.svd_alpha = j.value("svd_alpha", c.svd_alpha);
  c.n_spatial_components = j.value("n_spatial_components", c.n_spatial_components);
  c.n_delay_embedding = j.value("n_delay_embedding", c.n_delay_embedding);
  c.gaze_shift_s = j.value("gaze_shift_s", c.gaze_shift_s);
  c.validate();
  return c;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

}  // namespace

void write_tdca_model(const std::filesystem::path& path, const TdcaModel& model) {
  json j;
  j["filters"] = matrix_to_json(model.filters);
  j["pattern"] = matrix_to_json(model.pattern);
  j["s_b"] = matrix_to_json(model.s_b);
  j["s_w"] = matrix_to_json(model.s_w);
  j["eigenvalues"] = std::vector<double>(model.eigenvalues.data(),
                                         model.eigenvalues.data() + model.eigenvalues.size());
  open_out(path, false) << j.dump(2) << '\n';
}

TdcaModel read_tdca_model(const std::filesystem::path& path) {
  const json j = load_json(path);
  TdcaModel model;
  model.filters = matrix_from_json(j.at("filters"));
  model.pattern = matrix_from_json(j.at("pattern"));
  model.s_b = matrix_from_json(j.at("s_b"));
  model.s_w = matrix_from_json(j.at("s_w"));
  const auto ev = j.at("eigenvalues").get<std::vector<double>>();
  model.eigenvalues = Eigen::Map<const Eigen::VectorXd>(ev.data(), ev.size());
  return model;
}

void write_trf(const std::filesystem::path& path, const Trf& trf) {
  json j;
  j["taps"] = trf.taps;
  j["tau_min_s"] = trf.tau_min_s;
  j["tau_max_s"] = trf.tau_max_s;
  j["fs_hz"] = trf.fs_hz;
  j["retained_rank"] = trf.retained_rank;
  j["alpha"] = trf.alpha;
  j["eigen_spectrum"] = trf.eigen_spectrum;
  open_out(path, false) << j.dump(2) << '\n';
}

Trf read_trf(const std::filesystem::path& path) {
  const json j = load_json(path);
  Trf trf;
  trf.taps = j.at("taps").get<std::vector<double>>();
  trf.tau_min_s = j.at("tau_min_s").get<double>();
  trf.tau_max_s = j.at("tau_max_s").get<double>();
  trf.fs_hz = j.at("fs_hz").get<double>();
  trf.retained_rank = j.value("retained_rank", 0);
  trf.alpha = j.value("alpha", 0.9);
  trf.eigen_spectrum = j.value("eigen_spectrum", std::vector<double>{});
  return trf;
}

void write_template_bank(const std::filesystem::path& path, const TemplateBank& bank) {
  bank.validate();
  json j;
  j["fs_hz"] = bank.fs_hz;
  j["n_shifts"] = bank.n_shifts;
  j["fb_weights"] = bank.fb_weights;
  j["filter_order"] = bank.fb.filter_order;
  j["zero_phase"] = bank.fb.zero_phase;
  json edges = json::array();
  for (const auto& [lo, hi] : bank.fb.band_edges) edges.push_back({lo, hi});
  j["band_edges"] = std::move(edges);
  j["templates"] = bank.templates;
  open_out(path, false) << j.dump() << '\n';
}

TemplateBank read_template_bank(const std::filesystem::path& path) {
  const json j = load_json(path);
  TemplateBank bank;
  bank.fs_hz = j.at("fs_hz").get<double>();
  bank.n_shifts = j.at("n_shifts").get<int>();
  bank.fb_weights = j.at("fb_weights").get<std::vector<double>>();
  bank.fb.filter_order = j.value("filter_order", 4);
  bank.fb.zero_phase = j.value("zero_phase", true);
  for (const auto& e : j.at("band_edges"))
    bank.fb.band_edges.emplace_back(e[0].get<double>(), e[1].get<double>());
  bank.fb.n_bands = static_cast<int>(bank.fb.band_edges.size());
  bank.templates = j.at("templates").get<std::vector<std::vector<std::vector<double>>>>();
  bank.validate();
  return bank;
}

}  // namespace cvep
