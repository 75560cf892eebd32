#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sideband/config.hpp"
#include "sideband/diagnostics.hpp"
#include "sideband/detection.hpp"
#include "sideband/fitting.hpp"
#include "sideband/io.hpp"

namespace sideband {

class UsageError : public InputError {
public:
    using InputError::InputError;
};

enum class Command { spectrum, cool, tin, synth, dualhomodyne, fit, calibrate, thermometry };
enum class OutputFormat { csv, json };

const std::vector<std::string>& command_names();
Command parse_command(const std::string& name);  // UsageError for anything else
std::string to_string(Command c);
OutputFormat parse_format(const std::string& name);

struct PipelineOptions {
    std::filesystem::path out_dir = "out";
    OutputFormat format = OutputFormat::csv;
};

// Runs one command, writes its outputs and manifest.json under out_dir.
RunManifest run_pipeline(const ExperimentConfig& config, Command command, const PipelineOptions& options);

// Maps an in-flight exception onto the typed record and exit status the CLI reports.
ErrorRecord error_record(std::exception_ptr error, const std::string& command, const std::string& config_hash);

std::vector<Interval> tone_bands(const NoiseEnsemble& ensemble, double half_width);

struct ThermometryOptions {
    WelchOptions welch;
    double fit_half_width = 0;  // rad/s around ±Ω′
    std::vector<Interval> masks;
    std::vector<Interval> tones;  // calibration tone bands; empty skips calibration
};

struct ThermometryResult {
    std::optional<CalibrationResult> calibration;
    SpectrumGrid field;
    LorentzianFit upper, lower;  // fits at +Ω′ and −Ω′
    double ratio = 0;
    double ratio_err = 0;
    double omega_shifted = 0;    // mean of the fitted |centres|
    double s = 0;
    OccupancyEstimate occupancy;
    double n_err = 0;
    SidebandPair integrated;     // area-based cross-check
};

// Welch, fit window, masks and tone bands as the thermometry command uses them.
ThermometryOptions thermometry_options(const ExperimentConfig& config, const ResolvedSystem& resolved);

// Calibrates stream 2 against the pair (when given), reconstructs the field, fits both sidebands and
// converts the area ratio to an occupancy with the cavity asymmetry of `probe`.
ThermometryResult analyze_thermometry(const TimeSeries& stream1, const TimeSeries& stream2,
                                      const std::optional<std::pair<TimeSeries, TimeSeries>>& calibration_pair,
                                      const std::array<DetectionChain, 2>& chains, const OpticalMode& probe,
                                      double omega_guess, const ThermometryOptions& options);

}  // namespace sideband
