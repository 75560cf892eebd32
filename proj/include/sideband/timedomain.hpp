#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sideband/series.hpp"
#include "sideband/system_model.hpp"

namespace sideband {

// Independent random streams derived from one top-level seed.
enum class Stream : std::uint64_t {
    frequency_noise = 1,
    thermal = 2,
    probe_vac1 = 3,
    probe_vac2 = 4,
    upstream_vac = 5,
    cooling_vac1 = 6,
    cooling_vac2 = 7,
    chain1_vac = 8,
    chain2_vac = 9,
    cooling_det_vac = 10,
};

// mt19937_64 seeded through seed_seq{seed_lo, seed_hi, stream}.
std::mt19937_64 substream(std::uint64_t seed, Stream stream);

// Q̈ = −ω0² Q − γ Q̇ + b F, with F white of two-sided intensity D (⟨F(t)F(t′)⟩ = D δ(t − t′)).
struct DampedOscillator {
    double omega0 = 0;
    double gamma = 0;
    double b = 1;
    double intensity = 0;

    // Thermally driven mechanical mode: b = Ω_m, D = 2Γ(n_th + ½), so ⟨Q²⟩ = n_th + ½.
    static DampedOscillator thermal(const MechanicalMode& m);

    // State y = (Q, Q̇/ω0).
    Eigen::Matrix2d propagator(double h) const;
    Eigen::Matrix2d stationary_covariance() const;
    double continuous_psd(double omega) const;     // per Hz, two-sided
    // PSD of the samples Q(nh), including aliasing, per Hz.
    double sampled_psd(double omega, double fs) const;
};

struct EnsembleMode {
    MechanicalMode mode;
    double coupling = 0;  // cavity detuning shift per unit dimensionless Q, rad/s
};

struct NoiseEnsemble {
    std::vector<EnsembleMode> modes;
    std::uint64_t seed = 0;

    void validate() const;
    double highest_frequency() const;
    double psd(double omega) const;                     // S_ΔΔ, continuous time
    double sampled_psd(double omega, double fs) const;  // S_ΔΔ of the sampled series
};

struct EnsembleOptions {
    std::size_t count = 100;
    double omega_lo = 2 * M_PI * 0.3e6;
    double omega_hi = 2 * M_PI * 7.0e6;
    double gap_lo = 2 * M_PI * 1.1e6;   // no modes inside the bandgap
    double gap_hi = 2 * M_PI * 1.25e6;
    double linewidth = 2 * M_PI * 300.0;
    double temperature = 300.0;
    double rms_detuning = 2 * M_PI * 20e3;  // total rms of Δ(t), shared equally between modes
    std::uint64_t seed = 0;
};

// Uniformly spaced modes outside the gap; equal variance per mode emulates a flat S_ΔΔ.
NoiseEnsemble default_ensemble(const EnsembleOptions& options = {});

// Sum of the ensemble's Langevin-driven displacements times their couplings.
TimeSeries synth_frequency_noise(const NoiseEnsemble& ensemble, double fs, std::size_t n_samples,
                                 std::uint64_t seed);

struct TransduceOptions {
    bool include_linear = true;
    double band_limit = 0;  // rad/s, for the fast-cavity ratio; 0 means the Nyquist frequency
};

struct Transduction {
    TimeSeries intensity;      // I/|ā|² − 1
    double fast_cavity_ratio;  // κ / band_limit, ≫ 1 for a valid static expansion
};

// Memoryless expansion c₁δ + c₂δ² + c₃δ³ of the intracavity intensity, truncated at `order`.
Transduction transduce_fast_cavity(const TimeSeries& delta, const OpticalMode& mode, int order,
                                   const TransduceOptions& options = {});

struct DefectForces {
    std::uint64_t thermal_seed = 0;
    bool thermal = true;
    std::span<const double> backaction;  // external force samples, linear between samples
    std::span<const double> tin;         // TIN force samples, same convention
    double gamma_opt = 0;                // optical damping folded into the oscillator
    double omega_shifted = 0;            // dressed frequency; 0 keeps Ω_m
    bool stationary_start = true;        // initial state from the thermal stationary law
    Eigen::Vector2d initial{0.0, 0.0};   // (Q, Q̇/ω0) when !stationary_start
};

// Exact-propagator integration of the dressed oscillator driven by the thermal bath of `mode`
// (intensity 2Γ(n_th + ½)) and the supplied forces.
TimeSeries integrate_defect_mode(const MechanicalMode& mode, const DefectForces& forces, double fs,
                                 std::size_t n_samples);

// The oscillator integrate_defect_mode uses for the thermal drive.
DampedOscillator effective_oscillator(const MechanicalMode& mode, double gamma_opt, double omega_shifted);

}  // namespace sideband
