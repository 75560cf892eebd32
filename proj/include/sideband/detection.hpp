#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sideband/network.hpp"
#include "sideband/spectrum.hpp"

namespace sideband {

using Interval = std::pair<double, double>;  // [lo, hi] in rad/s

// Complex cross-spectrum ⟨X1(ω) X2(ω)^*⟩ on a uniform axis.
struct CrossSpectrum {
    UniformAxis axis;
    std::vector<cd> values;
};

// ½ + η[2 g_p² κ_{p,1} |χ_p(−ω)|² (S̄_QQ(ω) + Im χ'_m(ω)) + κ_{p,1} n_p |χ_p(−ω)|² S_ΔΔ(ω)]
SpectrumGrid probe_output_psd(const UniformAxis& axis, const OpticalSystem& system);
// Same quantity from the full linear network (all correlations kept).
SpectrumGrid probe_output_psd_network(const UniformAxis& axis, const OpticalSystem& system);

// Output PSD of the cooling beam, quadrature theta (0 = amplitude), detection efficiency eta.
// tin_phase rotates the direct TIN term (e^{+iφ} at ω > 0, e^{−iφ} at ω < 0).
SpectrumGrid cooling_output_psd(const UniformAxis& axis, const OpticalSystem& system, double eta = 1.0,
                                double theta = 0.0, double tin_phase = 0.0);
// The interference (cross) contribution alone: total minus the TIN-free and TIN-only parts.
SpectrumGrid cooling_tin_interference(const UniformAxis& axis, const OpticalSystem& system, double tin_phase = 0.0);

SpectrumGrid homodyne_psd(const UniformAxis& axis, const DetectionChain& chain, const OpticalSystem& system,
                          int chain_index = 0);
CrossSpectrum homodyne_cross_psd(const UniformAxis& axis, const DetectionChain& c1, const DetectionChain& c2,
                                 const OpticalSystem& system);

struct Reconstruction {
    SpectrumGrid field;        // heterodyne-equivalent S̄(ω), quanta
    SpectrumGrid s_xx, s_yy;   // recovered quadrature spectra
    double conditioning = 1;   // 1 / sin²(θ₁ − θ₂)
};

Reconstruction dual_homodyne_reconstruct(const SpectrumGrid& psd_1, const SpectrumGrid& psd_2,
                                         const CrossSpectrum& cross_12, const DetectionChain& chain_1,
                                         const DetectionChain& chain_2);

// |χ_p(−Ω)|² / |χ_p(Ω)|²
double asymmetry_factor(double omega_m_shifted, const OpticalMode& probe);

struct SidebandPair {
    double omega_m_shifted = 0;
    double area_pos = 0;  // ∫ (S̄ − floor) dω/2π around +Ω'
    double area_neg = 0;  // same around −Ω'
    double ratio = 0;     // area_pos / area_neg
    double floor = 0.5;
    bool negative_area = false;
    std::string convention = "ratio = area(+omega) / area(-omega); exp(-i omega t) labelling of the field";
};

struct SidebandOptions {
    std::vector<Interval> masks;  // excluded intervals (either sign of ω)
    std::optional<double> floor;  // known shot-noise floor; otherwise median of adjacent quiet bands
    double quiet_band = 0;        // width of each adjacent band, defaults to half_window
    // Transduction of the line, e.g. |χ_p(−ω)|². When set, each bin's excess is scaled by
    // weight(±Ω′)/weight(ω), so s(Ω′) stays the right correction however wide the window.
    std::function<double(double)> weight;
};

SidebandPair sideband_ratio(const SpectrumGrid& psd, double omega_m_shifted, double half_window,
                            const SidebandOptions& options = {});

struct OccupancyEstimate {
    double n = 0;            // 1/(R/s − 1)
    double n_alternate = 0;  // 1/(1 − R/s), the opposite labelling
    double ratio_over_s = 0;
    bool infinite = false;
    bool orientation_mismatch = false;
    std::string convention = "n = 1/(R/s - 1), anti-Stokes-enhanced sideband at +omega carries n+1";
};

OccupancyEstimate occupancy_from_asymmetry(double R, double s);

}  // namespace sideband
