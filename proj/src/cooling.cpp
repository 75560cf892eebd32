#include "sideband/cooling.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sideband/diagnostics.hpp"

namespace sideband {

BackactionReport backaction(const MechanicalMode& mode, const OpticalMode& beam) {
    const double om = mode.omega_m();
    const double g2 = beam.g() * beam.g();
    const double k = beam.kappa();
    const double d = beam.detuning();
    BackactionReport r;
    r.g = beam.g();
    r.a_minus = g2 * k * std::norm(chi_cav(om, beam));
    r.a_plus = g2 * k * std::norm(chi_cav(-om, beam));
    r.gamma_opt = r.a_minus - r.a_plus;
    const OpticalMode beams[] = {beam};
    r.spring_shift = spring_shift(om, mode, beams);
    r.damped = r.gamma_opt > 0;
    // The ratio does not depend on g; evaluate it from the susceptibilities alone.
    const double ap = std::norm(chi_cav(-om, beam));
    const double am = std::norm(chi_cav(om, beam));
    r.n_min = am > ap ? ap / (am - ap) : std::numeric_limits<double>::quiet_NaN();
    const double denom = -4.0 * d * om;
    r.n_min_printed = ((om + d) * (om + d) + k * k) / denom;
    r.n_min_closed = ((om + d) * (om + d) + k * k / 4) / denom;
    r.cooperativity_q = mode.n_th() > 0 ? 4 * g2 / (k * mode.gamma() * mode.n_th())
                                        : std::numeric_limits<double>::infinity();
    return r;
}

void HeatingBudget::validate() const {
    if (!(n_th_effective >= 0)) throw std::invalid_argument("HeatingBudget.n_th_effective must be >= 0");
    if (!(tin_force_psd >= 0)) throw std::invalid_argument("HeatingBudget.tin_force_psd must be >= 0");
    if (!(absorption_temp_rise >= 0)) throw std::invalid_argument("HeatingBudget.absorption_temp_rise must be >= 0");
}

HeatingBudget plain_bath(const MechanicalMode& mode) {
    HeatingBudget h;
    h.n_th_effective = mode.n_th();
    return h;
}

HeatingBudget absorption_model(double g_squared, const AbsorptionCoefficients& coeffs, double bath_temperature,
                               double n_th) {
    if (coeffs.domega_dt < 0 || coeffs.dt_dpower < 0)
        throw std::invalid_argument("absorption coefficients must be >= 0");
    if (!(bath_temperature > 0)) throw std::invalid_argument("bath temperature must be > 0");
    HeatingBudget h;
    h.absorption_temp_rise = coeffs.dt_dpower * g_squared;
    h.absorption_freq_shift = -coeffs.domega_dt * h.absorption_temp_rise;
    h.n_th_effective = n_th * (bath_temperature + h.absorption_temp_rise) / bath_temperature;
    return h;
}

double tin_force_psd_from_ratio(double ratio, const OpticalMode& beam) {
    if (ratio < 0) throw std::invalid_argument("TIN ratio must be >= 0");
    return ratio / (2.0 * beam.kappa1());
}

OccupancyResult effective_occupancy(std::span<const BackactionReport> reports, const MechanicalMode& mode,
                                    const HeatingBudget& heating) {
    heating.validate();
    double a_plus = 0, gopt = 0;
    for (const auto& r : reports) {
        a_plus += r.a_plus;
        gopt += r.gamma_opt;
    }
    const double g = reports.empty() ? 0.0 : reports.front().g;
    OccupancyResult out;
    out.gamma_total = gopt + mode.gamma();
    out.anti_damped = !(out.gamma_total > 0);
    const double num = a_plus + heating.n_th_effective * mode.gamma() + 2 * g * g * heating.tin_force_psd;
    out.n_eff = out.anti_damped ? std::numeric_limits<double>::infinity() : num / out.gamma_total;
    return out;
}

OccupancyResult effective_occupancy(const BackactionReport& report, const MechanicalMode& mode,
                                    const HeatingBudget& heating) {
    return effective_occupancy(std::span<const BackactionReport>(&report, 1), mode, heating);
}

double displacement_psd_at(double omega, const MechanicalMode& mode, std::span<const OpticalMode> beams,
                           const HeatingBudget& heating) {
    double drive = 2 * mode.gamma() * (heating.n_th_effective + 0.5);
    for (const auto& b : beams)
        drive += b.kappa() * b.g() * b.g() * (std::norm(chi_cav(omega, b)) + std::norm(chi_cav(-omega, b)));
    if (!beams.empty()) drive += 4 * beams.front().g() * beams.front().g() * heating.tin_force_psd;
    return std::norm(chi_mech_modified(omega, mode, beams)) * drive;
}

SpectrumGrid displacement_psd(const UniformAxis& axis, const MechanicalMode& mode, const OpticalMode& cooling,
                              const OpticalMode& probe, const HeatingBudget& heating) {
    heating.validate();
    const OpticalMode beams[] = {cooling, probe};
    const double wp = shifted_frequency(mode, beams);
    const double width = mode.gamma() + gamma_opt(wp, mode, beams);
    if (width / axis.step < 50)
        warn("displacement_psd: only " + std::to_string(width / axis.step) +
             " grid points span the total linewidth (want >= 50)");
    return tabulate(axis, SpectrumUnits::quanta,
                    [&](double w) { return displacement_psd_at(w, mode, beams, heating); });
}

double coupling_for_damping(const MechanicalMode& mode, const OpticalMode& beam, double target_gamma_opt,
                            bool at_shifted, std::span<const OpticalMode> others) {
    if (!(target_gamma_opt >= 0)) throw std::invalid_argument("target damping must be >= 0");
    if (target_gamma_opt == 0) return 0.0;
    double w = mode.omega_m();
    double g = 0;
    for (int it = 0; it < 200; ++it) {
        const OpticalMode unit = beam.with_g(1.0);
        const double per_g2 = unit.kappa() * (std::norm(chi_cav(w, unit)) - std::norm(chi_cav(-w, unit)));
        if (!(per_g2 > 0)) throw std::invalid_argument("beam detuning does not damp the mode");
        const double next = std::sqrt(target_gamma_opt * w / mode.omega_m() / per_g2);
        if (!at_shifted) return std::sqrt(target_gamma_opt / per_g2);
        std::vector<OpticalMode> beams(others.begin(), others.end());
        beams.push_back(beam.with_g(next));
        const double wn = shifted_frequency(mode, beams);
        if (std::abs(next - g) <= 1e-15 * next && std::abs(wn - w) <= 1e-15 * w) return next;
        g = next;
        w = wn;
    }
    return g;
}

}  // namespace sideband
