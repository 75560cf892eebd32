#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "sideband/spectrum.hpp"

namespace sideband {

// One cavity resonance as seen by one laser. All rates in rad/s.
// Port 1 (index 0) is the detection port; any part of kappa not assigned
// to a listed port is treated as one extra loss port.
class OpticalMode {
public:
    OpticalMode(double kappa, double detuning, std::vector<double> port_couplings, double g, std::string label = {});

    double kappa() const { return kappa_; }
    double detuning() const { return detuning_; }
    const std::vector<double>& port_couplings() const { return ports_; }
    double kappa1() const { return ports_.front(); }
    double g() const { return g_; }
    const std::string& label() const { return label_; }

    // Port rates including the unassigned remainder, summing to kappa.
    std::vector<double> all_ports() const;

    OpticalMode with_detuning(double detuning) const;
    OpticalMode with_g(double g) const;

private:
    double kappa_;
    double detuning_;
    std::vector<double> ports_;
    double g_;
    std::string label_;
};

class MechanicalMode {
public:
    MechanicalMode(double omega_m, double gamma, double n_th, bool soft_clamped = false);

    double omega_m() const { return omega_m_; }
    double gamma() const { return gamma_; }
    double n_th() const { return n_th_; }
    bool soft_clamped() const { return soft_clamped_; }
    double quality_factor() const { return omega_m_ / gamma_; }

    MechanicalMode with_n_th(double n_th) const;

private:
    double omega_m_;
    double gamma_;
    double n_th_;
    bool soft_clamped_;
};

// 1 / (kappa/2 - i(Delta + omega))
cd chi_cav(double omega, const OpticalMode& mode);
// [chi_cav(-omega)]^*, evaluated directly
cd chi_cav_conj_neg(double omega, const OpticalMode& mode);
ComplexResponse chi_cav(const std::vector<double>& omega, const OpticalMode& mode);

// Omega_m / (Omega_m^2 - omega^2 - i omega Gamma)
cd chi_mech(double omega, const MechanicalMode& mode);
ComplexResponse chi_mech(const std::vector<double>& omega, const MechanicalMode& mode);

// Optical self-energy Σ(ω) = Σ_beams 2 i g² (χ*(−ω) − χ(ω)); χ'^{-1} = χ_m^{-1} + Σ.
cd self_energy(double omega, std::span<const OpticalMode> beams);

cd chi_mech_modified(double omega, const MechanicalMode& mode, std::span<const OpticalMode> beams);
cd chi_mech_modified(double omega, const MechanicalMode& mode, const OpticalMode& cooling, const OpticalMode& probe);
ComplexResponse chi_mech_modified(const std::vector<double>& omega, const MechanicalMode& mode,
                                  const OpticalMode& cooling, const OpticalMode& probe);

// Single-beam form M(ω) χ_m(ω) with M = (1 + 2 i g² χ̃ χ_m)^{-1}, χ̃ = χ*(−ω) − χ(ω).
cd m_factor(double omega, const MechanicalMode& mode, const OpticalMode& cooling);
cd chi_mech_single_beam(double omega, const MechanicalMode& mode, const OpticalMode& cooling);

// Γ_opt(ω) = −Ω_m Im Σ / ω and δΩ_opt(ω) = Ω_m Re Σ / (2ω).
double gamma_opt(double omega, const MechanicalMode& mode, std::span<const OpticalMode> beams);
double spring_shift(double omega, const MechanicalMode& mode, std::span<const OpticalMode> beams);

// Solves ω² = Ω_m² + 2ω δΩ_opt(ω) for the dressed resonance Ω'_m.
double shifted_frequency(const MechanicalMode& mode, std::span<const OpticalMode> beams);

// sign * kappa / (2 sqrt 3)
double magic_detuning(double kappa, int sign);

}  // namespace sideband
