#pragma once

#include <span>

#include "sideband/spectrum.hpp"
#include "sideband/system_model.hpp"

namespace sideband {

struct BackactionReport {
    double a_plus = 0;        // Stokes rate, rad/s
    double a_minus = 0;       // anti-Stokes rate, rad/s
    double gamma_opt = 0;     // a_minus - a_plus
    double spring_shift = 0;  // δΩ_opt at Ω_m
    double n_min = 0;         // a_plus / gamma_opt; NaN when not damped
    double n_min_printed = 0; // ((Ω+Δ)² + κ²) / (−4ΔΩ), the closed form as printed in the literature
    double n_min_closed = 0;  // ((Ω+Δ)² + (κ/2)²) / (−4ΔΩ), equal to n_min
    double g = 0;             // coupling the report was computed for
    double cooperativity_q = 0;  // 4g²/(κ Γ n_th), assumed definition
    bool damped = false;      // gamma_opt > 0
};

BackactionReport backaction(const MechanicalMode& mode, const OpticalMode& beam);

struct HeatingBudget {
    double n_th_effective = 0;
    double tin_force_psd = 0;         // S̄_{X_TIN X_TIN} near Ω_m (per rad/s, two-sided)
    double absorption_freq_shift = 0; // δΩ_th, rad/s
    double absorption_temp_rise = 0;  // ΔT, K

    void validate() const;
};

// Bath with no extra heating.
HeatingBudget plain_bath(const MechanicalMode& mode);

struct AbsorptionCoefficients {
    double domega_dt = 0;  // rad/s per K
    double dt_dpower = 0;  // K per (rad/s)² of g²
};

// δΩ_th = −dΩ/dT · ΔT, ΔT = dT/dP · g², n_th scaled by (T + ΔT)/T.
HeatingBudget absorption_model(double g_squared, const AbsorptionCoefficients& coeffs, double bath_temperature,
                               double n_th);

// TIN intracavity amplitude-quadrature PSD producing `ratio` times shot noise at the output port.
double tin_force_psd_from_ratio(double ratio, const OpticalMode& beam);

struct OccupancyResult {
    double n_eff = 0;
    double gamma_total = 0;  // Γ + Σ Γ_opt
    bool anti_damped = false;
};

// (Σ A⁺ + n_th_eff Γ + 2g² S̄_TIN) / (Σ Γ_opt + Γ); the TIN coupling is that of the first report.
OccupancyResult effective_occupancy(std::span<const BackactionReport> reports, const MechanicalMode& mode,
                                    const HeatingBudget& heating);
OccupancyResult effective_occupancy(const BackactionReport& report, const MechanicalMode& mode,
                                    const HeatingBudget& heating);

// S̄_QQ(ω) = |χ'|² [2Γ(n_th+½) + Σ_b κ_b g_b² (|χ_b(ω)|² + |χ_b(−ω)|²) + 4g_c² S̄_TIN], quanta units.
SpectrumGrid displacement_psd(const UniformAxis& axis, const MechanicalMode& mode, const OpticalMode& cooling,
                              const OpticalMode& probe, const HeatingBudget& heating);
double displacement_psd_at(double omega, const MechanicalMode& mode, std::span<const OpticalMode> beams,
                           const HeatingBudget& heating);

// Coupling g giving Γ_opt = target at the dressed frequency (or at Ω_m if !at_shifted).
// `others` are additional beams that contribute to the spring shift.
double coupling_for_damping(const MechanicalMode& mode, const OpticalMode& beam, double target_gamma_opt,
                            bool at_shifted = true, std::span<const OpticalMode> others = {});

}  // namespace sideband
