#include "sideband/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sideband {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

// 1/(a + i b) split into real and imaginary parts.
cd inv(double a, double b) {
    const double d = a * a + b * b;
    return {a / d, -b / d};
}

}  // namespace

OpticalMode::OpticalMode(double kappa, double detuning, std::vector<double> port_couplings, double g,
                         std::string label)
    : kappa_(kappa), detuning_(detuning), ports_(std::move(port_couplings)), g_(g), label_(std::move(label)) {
    if (!(kappa_ > 0) || !std::isfinite(kappa_))
        throw std::invalid_argument("OpticalMode.kappa must be > 0, got " + fmt(kappa_));
    if (!std::isfinite(detuning_)) throw std::invalid_argument("OpticalMode.detuning must be finite");
    if (!(g_ >= 0) || !std::isfinite(g_)) throw std::invalid_argument("OpticalMode.g must be >= 0, got " + fmt(g_));
    if (ports_.empty()) ports_.push_back(kappa_);
    for (double k : ports_)
        if (!(k >= 0)) throw std::invalid_argument("OpticalMode.port_couplings entries must be >= 0, got " + fmt(k));
    const double total = std::accumulate(ports_.begin(), ports_.end(), 0.0);
    if (total > kappa_ * (1 + 1e-12))
        throw std::invalid_argument("OpticalMode.port_couplings: sum " + fmt(total) + " exceeds kappa " + fmt(kappa_));
}

std::vector<double> OpticalMode::all_ports() const {
    std::vector<double> p = ports_;
    const double rest = kappa_ - std::accumulate(p.begin(), p.end(), 0.0);
    if (rest > 1e-12 * kappa_) p.push_back(rest);
    return p;
}

OpticalMode OpticalMode::with_detuning(double detuning) const {
    OpticalMode m = *this;
    m.detuning_ = detuning;
    return m;
}

OpticalMode OpticalMode::with_g(double g) const {
    return OpticalMode(kappa_, detuning_, ports_, g, label_);
}

MechanicalMode::MechanicalMode(double omega_m, double gamma, double n_th, bool soft_clamped)
    : omega_m_(omega_m), gamma_(gamma), n_th_(n_th), soft_clamped_(soft_clamped) {
    if (!(omega_m_ > 0) || !std::isfinite(omega_m_))
        throw std::invalid_argument("MechanicalMode.omega_m must be > 0, got " + fmt(omega_m_));
    if (!(gamma_ > 0) || !std::isfinite(gamma_))
        throw std::invalid_argument("MechanicalMode.gamma must be > 0, got " + fmt(gamma_));
    if (!(n_th_ >= 0) || !std::isfinite(n_th_))
        throw std::invalid_argument("MechanicalMode.n_th must be >= 0, got " + fmt(n_th_));
}

MechanicalMode MechanicalMode::with_n_th(double n_th) const {
    return MechanicalMode(omega_m_, gamma_, n_th, soft_clamped_);
}

cd chi_cav(double omega, const OpticalMode& mode) {
    return inv(mode.kappa() / 2, -(mode.detuning() + omega));
}

cd chi_cav_conj_neg(double omega, const OpticalMode& mode) {
    // 1/(κ/2 + i(Δ − ω))
    return inv(mode.kappa() / 2, mode.detuning() - omega);
}

ComplexResponse chi_cav(const std::vector<double>& omega, const OpticalMode& mode) {
    return evaluate(omega, [&](double w) { return chi_cav(w, mode); });
}

cd chi_mech(double omega, const MechanicalMode& mode) {
    const double om = mode.omega_m();
    return om / cd(om * om - omega * omega, -omega * mode.gamma());
}

ComplexResponse chi_mech(const std::vector<double>& omega, const MechanicalMode& mode) {
    return evaluate(omega, [&](double w) { return chi_mech(w, mode); });
}

cd self_energy(double omega, std::span<const OpticalMode> beams) {
    cd s = 0.0;
    for (const auto& b : beams) {
        const double g2 = b.g() * b.g();
        s += cd(0, 2 * g2) * (chi_cav_conj_neg(omega, b) - chi_cav(omega, b));
    }
    return s;
}

cd chi_mech_modified(double omega, const MechanicalMode& mode, std::span<const OpticalMode> beams) {
    const double om = mode.omega_m();
    const cd inv_chi = cd(om * om - omega * omega, -omega * mode.gamma()) / om;
    return 1.0 / (inv_chi + self_energy(omega, beams));
}

cd chi_mech_modified(double omega, const MechanicalMode& mode, const OpticalMode& cooling, const OpticalMode& probe) {
    const OpticalMode beams[] = {cooling, probe};
    return chi_mech_modified(omega, mode, beams);
}

ComplexResponse chi_mech_modified(const std::vector<double>& omega, const MechanicalMode& mode,
                                  const OpticalMode& cooling, const OpticalMode& probe) {
    const OpticalMode beams[] = {cooling, probe};
    return evaluate(omega, [&](double w) { return chi_mech_modified(w, mode, beams); });
}

cd m_factor(double omega, const MechanicalMode& mode, const OpticalMode& cooling) {
    const cd chi_t = chi_cav_conj_neg(omega, cooling) - chi_cav(omega, cooling);
    const double g2 = cooling.g() * cooling.g();
    return 1.0 / (1.0 + cd(0, 2 * g2) * chi_t * chi_mech(omega, mode));
}

cd chi_mech_single_beam(double omega, const MechanicalMode& mode, const OpticalMode& cooling) {
    return m_factor(omega, mode, cooling) * chi_mech(omega, mode);
}

double gamma_opt(double omega, const MechanicalMode& mode, std::span<const OpticalMode> beams) {
    return -mode.omega_m() * self_energy(omega, beams).imag() / omega;
}

double spring_shift(double omega, const MechanicalMode& mode, std::span<const OpticalMode> beams) {
    return mode.omega_m() * self_energy(omega, beams).real() / (2 * omega);
}

double shifted_frequency(const MechanicalMode& mode, std::span<const OpticalMode> beams) {
    const double om = mode.omega_m();
    double w = om;
    for (int it = 0; it < 100; ++it) {
        const double arg = om * om + om * self_energy(w, beams).real();
        if (!(arg > 0)) throw std::invalid_argument("optical spring drives the mechanical frequency below zero");
        const double next = std::sqrt(arg);
        if (std::abs(next - w) <= 1e-14 * om) return next;
        w = next;
    }
    return w;
}

double magic_detuning(double kappa, int sign) {
    if (!(kappa > 0)) throw std::invalid_argument("magic_detuning: kappa must be > 0");
    if (sign != 1 && sign != -1) throw std::invalid_argument("magic_detuning: sign must be +1 or -1");
    return sign * kappa / (2.0 * std::sqrt(3.0));
}

}  // namespace sideband
