#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sideband/synthesis.hpp"
#include "sideband/tin.hpp"
#include "sideband/welch.hpp"

namespace sideband {

// Config files speak Hz (ordinary frequency) for every rate and frequency.

struct MechanicsConfig {
    double frequency_hz = 1.167e6;
    double quality_factor = 1.8e8;
    double bath_temperature_k = 300.0;
    std::optional<double> n_th;                 // bath occupancy; default k_B T / ħΩ
    std::optional<double> target_n_eff = 9.5;   // solve the effective bath occupancy for this n_eff
    bool soft_clamped = true;
};

struct BeamConfig {
    double kappa_hz = 14e6;
    std::optional<double> detuning_hz;          // default: red magic detuning −κ/(2√3)
    std::vector<double> port_couplings_hz;      // default: kappa1_fraction × κ on port 1
    double kappa1_fraction = 0.9;
    std::optional<double> g_hz;                 // multi-photon coupling
    std::optional<double> gamma_opt_hz;         // or: coupling that gives this damping at Ω′
    std::optional<double> g0_hz;                // single-photon coupling
    std::optional<double> photons;              // intracavity photon number
};

struct HeatingConfig {
    double tin_ratio = 0.15;             // cooling-beam TIN at the output, in units of shot noise
    double domega_dt_hz_per_k = 0.0;     // absorption: frequency shift per kelvin
    double dt_dpower_k_per_hz2 = 0.0;    // absorption: temperature rise per (g/2π)²
};

struct EnsembleConfig {
    std::size_t count = 100;
    double lo_hz = 0.3e6;
    double hi_hz = 7.0e6;
    double gap_lo_hz = 1.1e6;
    double gap_hi_hz = 1.25e6;
    double linewidth_hz = 300.0;
    double temperature_k = 300.0;
    double rms_detuning_hz = 20e3;
};

struct SystemConfig {
    MechanicsConfig mechanics;
    BeamConfig cooling{14e6, std::nullopt, {}, 0.9, std::nullopt, 5526.0, std::nullopt, std::nullopt};
    BeamConfig probe{49.4e6, std::nullopt, {}, 0.9, 100e3, std::nullopt, std::nullopt, 1e6};
    HeatingConfig heating;
    EnsembleConfig ensemble;
    double upstream_efficiency = 0.8;
};

struct ChainConfig {
    double theta_rad = 0.0;
    double eta = 0.4;
    double lo_amplitude = 1.0;
    double bs_reflectivity = 0.01;
    bool tin_cancelled = true;
};

struct DetectionConfig {
    std::array<ChainConfig, 2> chains{ChainConfig{}, ChainConfig{-M_PI / 3}};
    double cooling_eta = 1.0;
    double cooling_theta_rad = 0.0;
    double tin_phase_rad = 0.0;
};

struct SynthesisConfig {
    double fs_hz = 31.25e6;
    std::size_t n_samples = std::size_t{1} << 24;
    std::optional<std::uint64_t> seed = 1;
    double gain_ratio = 1.3;
    double delay_samples = 2.0;
    int tin_order = 3;
    std::vector<double> tin_band_hz;  // [lo, hi]; empty: Ω′ ± 4(Γ + Γ_opt)
    bool cooling_stream = false;
    bool calibration_pair = true;
};

struct TinAnalysisConfig {
    double band_limit_hz = 7e6;
    std::size_t half_points = 700;       // S_ΔΔ grid has 2·half_points + 1 samples
    double band_lo_hz = 1.12e6;          // band for the shot-noise ratio
    double band_hi_hz = 1.23e6;
    double sweep_min = 0.2;              // 2|Δ|/κ
    double sweep_max = 1.5;
    double sweep_step = 0.05;            // grid anchored at 1/√3
    double intracavity_photons = 1e8;
    std::string method = "fft";
};

struct AnalysisConfig {
    std::size_t segment_length = 65536;
    double overlap = 0.5;
    std::string window = "hann";
    double fit_half_width = 8.0;          // in units of Γ + Γ_opt
    std::vector<std::array<double, 2>> masks_hz;
    double tone_half_width_hz = 1500.0;
    double spectrum_span_hz = 50e3;
    std::size_t spectrum_points = 2001;
    std::vector<double> fit_window_hz;    // [lo, hi] for `fit`
    std::optional<std::string> input;     // file or directory read by fit, calibrate, dualhomodyne
    TinAnalysisConfig tin;
};

struct ExperimentConfig {
    SystemConfig system;
    DetectionConfig detection;
    SynthesisConfig synthesis;
    AnalysisConfig analysis;
};

nlohmann::json to_json(const ExperimentConfig& c);
// Strict: unknown keys and wrong types are schema errors naming the field.
ExperimentConfig from_json(const nlohmann::json& j);

// Validates every nested invariant; throws InputError naming the field and both values.
void validate(const ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& c, const std::filesystem::path& path);

// Sorted-key compact dump of the filled config.
std::string canonical_json(const ExperimentConfig& c);
// SHA-256 of the canonical form, hex.
std::string config_hash(const ExperimentConfig& c);

// The physical model the config describes, with couplings and bath occupancy solved.
struct ResolvedSystem {
    OpticalSystem system;
    double n_eff = 0;
    double omega_shifted = 0;
    double gamma_opt_total = 0;
    double cooling_photons = 0;
    double tin_ratio = 0;
};
ResolvedSystem resolve_system(const ExperimentConfig& c);

NoiseEnsemble make_ensemble(const ExperimentConfig& c);
std::array<DetectionChain, 2> make_chains(const ExperimentConfig& c);
WelchOptions make_welch(const ExperimentConfig& c);
SynthesisSetup make_synthesis(const ExperimentConfig& c, const ResolvedSystem& r);

}  // namespace sideband
