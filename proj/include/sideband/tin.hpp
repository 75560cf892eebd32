#pragma once

#include <span>
#include <vector>

#include "sideband/spectrum.hpp"
#include "sideband/system_model.hpp"

namespace sideband {

// Two-sided S_ΔΔ on a symmetric axis n·dω, n = −M..M (rad²/s² per rad/s).
struct FrequencyNoiseSpectrum {
    SpectrumGrid grid;
    double band_limit = 0;

    void validate() const;
    double step() const { return grid.axis.step; }
    std::size_t half_size() const { return (grid.size() - 1) / 2; }
};

// Flat level up to band_limit. The edge samples carry half weight so plain sums are trapezoid sums.
FrequencyNoiseSpectrum flat_frequency_noise(double level, double band_limit, double step);
// Any tabulated spectrum; resampled onto a symmetric axis (linear interpolation, with a warning) when needed.
FrequencyNoiseSpectrum frequency_noise_from(const SpectrumGrid& grid);
FrequencyNoiseSpectrum scaled(const FrequencyNoiseSpectrum& noise, double factor);

// Second-order kernel K(ω, ω′) = χ*(ω′−ω)χ(ω′) − χ(ω)χ(ω′) − χ*(−ω)χ*(−ω′), with χ*(x) = [χ(x)]^*.
cd kernel_g(double omega, double omega_prime, const OpticalMode& mode);
// The same product with χ*(ω′) in the last factor, as it appears in print.
cd kernel_g_printed(double omega, double omega_prime, const OpticalMode& mode);

// Static transduction coefficients of I/|ā|² in powers of the detuning excursion δ.
double tin_first_order_coeff(const OpticalMode& mode);   // −2Δ₀ / D
double tin_second_order_coeff(const OpticalMode& mode);  // (3Δ₀² − (κ/2)²) / D²
double tin_cubic_coeff(const OpticalMode& mode);         // 2 Re{i|χ|²χ − iχ³} at ω = 0
// Re{i|χ(ω)|²χ(ω) − iχ(ω)³}
double tin_third_order_coeff(const OpticalMode& mode, double omega);

enum class TinMethod { fft, direct };

struct TinSpectrumResult {
    SpectrumGrid second_order;  // relative intensity PSD of I⁽²⁾/|ā|²
    double third_order_coeff = 0;
    double shot_noise_ratio = 0;  // band-averaged κ₁ n̄ S⁽²⁾, zero when no band/photons given
    std::size_t clipped_bins = 0;
    double most_negative = 0;
    bool resampled = false;
};

struct TinOptions {
    TinMethod method = TinMethod::fft;
    double intracavity_photons = 0;
    double band_lo = 0;  // rad/s, positive-frequency band for the shot-noise ratio
    double band_hi = 0;
};

// Native-grid S⁽²⁾_II on n·dω, n = −2M..2M, before clipping.
std::vector<double> tin_second_order_native(const FrequencyNoiseSpectrum& noise, const OpticalMode& mode,
                                            TinMethod method);

TinSpectrumResult tin_second_order_psd(const FrequencyNoiseSpectrum& noise, const OpticalMode& mode,
                                       const UniformAxis& output, const TinOptions& options = {});

struct TinSweepPoint {
    double detuning = 0;
    double ratio = 0;  // band-averaged S⁽²⁾ over shot noise at fixed intracavity photon number
};

std::vector<TinSweepPoint> tin_detuning_sweep(const FrequencyNoiseSpectrum& noise, const OpticalMode& mode_template,
                                              std::span<const double> detunings, double band_lo, double band_hi,
                                              double intracavity_photons, TinMethod method = TinMethod::fft);

// Rescales S_ΔΔ so the band-averaged ratio at `mode` equals target.
FrequencyNoiseSpectrum calibrate_noise_level(const FrequencyNoiseSpectrum& noise, const OpticalMode& mode,
                                             double band_lo, double band_hi, double intracavity_photons,
                                             double target_ratio);

}  // namespace sideband
