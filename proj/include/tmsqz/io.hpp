#pragma once

// File formats. Numbers are written in shortest round-trip form, so a
// write / read cycle is lossless and equal inputs give byte-identical files.
// CSV files may start with "# " comment lines (seed, config hash).

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tmsqz/dsp_analysis.hpp"
#include "tmsqz/homodyne_sim.hpp"
#include "tmsqz/opa_model.hpp"
#include "tmsqz/pump_program.hpp"
#include "tmsqz/state_estimation.hpp"

namespace tmsqz::io {

using nlohmann::json;
using Comments = std::vector<std::string>;

std::string format_double(double v);

// AWG program: {"sample_rate_hz", "trigger_offset_s", "samples_v": [...]}.
json to_json(const pump::AwgProgram& prog);
pump::AwgProgram awg_from_json(const json& j);
void write_awg_csv(std::ostream& os, const pump::AwgProgram& prog, const Comments& comments = {});
/// Reads "time_s,volts" rows; the grid must be uniform.
pump::AwgProgram read_awg_csv(std::istream& is);

struct CalibrationFile {
  pump::Calibration calibration;
  std::optional<opa::GainFit> gain_fit;
  std::optional<opa::LossBudget> loss_budget;
};

json to_json(const CalibrationFile& cal);
CalibrationFile calibration_from_json(const json& j);
CalibrationFile load_calibration(const std::filesystem::path& path);

/// Little-endian binary: magic "TMSQFRM1", u32 version, u32 kind, u64 seed,
/// f64 dt, f64 t0, u64 n_frames, u64 n_samples, f64 phase tags, f64 data.
void write_frames_binary(std::ostream& os, const homodyne::FrameSet& fs);
homodyne::FrameSet read_frames_binary(std::istream& is);

/// One row per frame: phase tag followed by the samples. Metadata in the
/// leading comment line.
void write_frames_csv(std::ostream& os, const homodyne::FrameSet& fs);
homodyne::FrameSet read_frames_csv(std::istream& is);

void write_spectrum_csv(std::ostream& os, const dsp::SpectrumEstimate& spec, const Comments& comments = {});
void write_variance_csv(std::ostream& os, const dsp::VarianceTrace& trace, const Comments& comments = {});
void write_power_csv(std::ostream& os, const pump::PowerTrace& trace, const Comments& comments = {});

json to_json(const core::GaussianState& s);
json to_json(const estimation::Ellipse& e);
json to_json(const estimation::TomographyStdErrors& se);
json to_json(const estimation::TomographyResult& r);
json to_json(const estimation::EprReport& r);
json to_json(const dsp::PureSqueezingEstimate& e);

/// Writes `j` with 2-space indent and a trailing newline.
void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace tmsqz::io
