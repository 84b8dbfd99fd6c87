#pragma once

#include <filesystem>

#include "cvep/decoder.hpp"
#include "cvep/tdca.hpp"
#include "cvep/trf.hpp"
#include "cvep/types.hpp"

namespace cvep {

// `.cvep` container: one UTF-8 JSON header line (magic "CVEP1", dims, fs,
// labels, channel names, byte order "LE"), a newline, then the raw
// little-endian float32 payload, trial-major, channel-major, time-minor.
void write_epochs(const std::filesystem::path& path, const EpochSet& epochs);
EpochSet read_epochs(const std::filesystem::path& path);

// Codebook as JSON with full-precision doubles.
void write_codebook(const std::filesystem::path& path, const Codebook& codebook);
Codebook read_codebook(const std::filesystem::path& path);

void write_config(const std::filesystem::path& path, const RunConfig& config);
RunConfig read_config(const std::filesystem::path& path);

void write_tdca_model(const std::filesystem::path& path, const TdcaModel& model);
TdcaModel read_tdca_model(const std::filesystem::path& path);

void write_trf(const std::filesystem::path& path, const Trf& trf);
Trf read_trf(const std::filesystem::path& path);

void write_template_bank(const std::filesystem::path& path, const TemplateBank& bank);
TemplateBank read_template_bank(const std::filesystem::path& path);

}  // namespace cvep
