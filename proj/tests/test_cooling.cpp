#include <catch_amalgamated.hpp>

#include <cmath>

#include "sideband/cooling.hpp"
#include "sideband/units.hpp"

using namespace sideband;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {
const double tp = two_pi;
const double kc = tp * 14e6;
const double kp = tp * 49.4e6;
const double wm = tp * 1.167e6;

MechanicalMode defect(double n_th = 1e5) { return MechanicalMode(wm, wm / 1.8e8, n_th, true); }
OpticalMode cooling(double g) { return OpticalMode(kc, magic_detuning(kc, -1), {0.9 * kc}, g); }
OpticalMode probe() { return OpticalMode(kp, magic_detuning(kp, -1), {0.9 * kp}, tp * 100e3); }

// Lorentzian scattering rates written out by hand.
double a_rate(double g, double kappa, double delta, double omega) {
    return g * g * kappa / (kappa * kappa / 4 + (delta + omega) * (delta + omega));
}
}  // namespace

TEST_CASE("backaction rates match the Lorentzian scattering rates") {
    const double g = tp * 3e5;
    const auto r = backaction(defect(), cooling(g));
    const double d = magic_detuning(kc, -1);
    CHECK_THAT(r.a_minus, WithinRel(a_rate(g, kc, d, wm), 1e-12));
    CHECK_THAT(r.a_plus, WithinRel(a_rate(g, kc, d, -wm), 1e-12));
    CHECK_THAT(r.gamma_opt, WithinRel(r.a_minus - r.a_plus, 1e-15));
    CHECK(r.damped);
    CHECK_THAT(r.cooperativity_q, WithinRel(4 * g * g / (kc * defect().gamma() * 1e5), 1e-12));
}

TEST_CASE("n_min agrees with its closed form and not with the printed kappa^2 variant") {
    const auto r = backaction(defect(), cooling(tp * 3e5));
    CHECK_THAT(r.n_min, WithinRel(r.n_min_closed, 1e-12));
    // frozen: ((Ω+Δ)² + (κ/2)²)/(−4ΔΩ) at κ/2π = 14 MHz, Δ = −κ/2√3, Ω/2π = 1.167 MHz
    const double d = magic_detuning(kc, -1);
    const double expect = ((wm + d) * (wm + d) + kc * kc / 4) / (-4 * d * wm);
    CHECK_THAT(r.n_min, WithinRel(expect, 1e-12));
    CHECK_THAT(r.n_min, WithinRel(3.0350, 1e-4));
    CHECK(r.n_min_printed > 3 * r.n_min);
}

TEST_CASE("n_min does not depend on g") {
    const double ref = backaction(defect(), cooling(tp * 1e4)).n_min;
    for (double g : {1e2, 3e5, 2e6}) CHECK_THAT(backaction(defect(), cooling(tp * g)).n_min, WithinRel(ref, 1e-12));
}

TEST_CASE("resolved-sideband asymptote (kappa/4 Omega)^2") {
    const double k = wm / 100;
    const OpticalMode beam(k, -wm, {k}, tp * 1e3);
    const auto r = backaction(defect(), beam);
    const double asym = std::pow(k / (4 * wm), 2);
    CHECK_THAT(r.n_min, WithinRel(asym, 0.01));
}

TEST_CASE("blue detuning anti-damps") {
    const OpticalMode blue(kc, -magic_detuning(kc, -1), {0.9 * kc}, tp * 3e5);
    const auto r = backaction(defect(), blue);
    CHECK_FALSE(r.damped);
    CHECK(std::isnan(r.n_min));
    const auto occ = effective_occupancy(r, defect(), plain_bath(defect()));
    CHECK(occ.anti_damped);
}

TEST_CASE("effective occupancy follows the rate balance") {
    const auto m = defect(2e6);
    const auto c = cooling(tp * 3e5);
    const auto p = probe();
    HeatingBudget h = plain_bath(m);
    h.tin_force_psd = tin_force_psd_from_ratio(0.15, c);
    CHECK_THAT(h.tin_force_psd, WithinRel(0.15 / (2 * 0.9 * kc), 1e-15));
    const BackactionReport reps[] = {backaction(m, c), backaction(m, p)};
    const auto occ = effective_occupancy(reps, m, h);
    const double num = reps[0].a_plus + reps[1].a_plus + 2e6 * m.gamma() + 2 * c.g() * c.g() * h.tin_force_psd;
    const double den = reps[0].gamma_opt + reps[1].gamma_opt + m.gamma();
    CHECK_THAT(occ.n_eff, WithinRel(num / den, 1e-12));
    CHECK_THAT(occ.gamma_total, WithinRel(den, 1e-15));
}

TEST_CASE("equipartition of the displacement spectrum") {
    // The optical spring renormalises the variance: the integral is (n + 1/2)(Ω_m/Ω′)², which is
    // within 1% of n + 1/2 only while |δΩ_opt| stays well below 1% of Ω_m.
    const auto m = defect(3e5);
    const OpticalMode p = probe();
    for (double target_hz : {500.0, 5526.0}) {
        const OpticalMode others[] = {p};
        const auto c = cooling(coupling_for_damping(m, cooling(0), tp * target_hz, true, others));
        HeatingBudget h = plain_bath(m);
        h.tin_force_psd = tin_force_psd_from_ratio(0.15, c);
        const BackactionReport reps[] = {backaction(m, c), backaction(m, p)};
        const auto occ = effective_occupancy(reps, m, h);
        const auto n = static_cast<std::size_t>(4 * wm / (occ.gamma_total / 100)) | 1;
        const auto s = displacement_psd(UniformAxis::span(-2 * wm, 2 * wm, n), m, c, p, h);
        const OpticalMode beams[] = {c, p};
        const double ratio = wm / shifted_frequency(m, beams);
        CHECK_THAT(integrate(s), WithinRel((occ.n_eff + 0.5) * ratio * ratio, 1e-3));
        if (target_hz < 1000) CHECK_THAT(integrate(s), WithinRel(occ.n_eff + 0.5, 0.01));
    }
}

TEST_CASE("coupling for the configured damping") {
    const auto m = defect();
    const OpticalMode others[] = {probe()};
    const double g = coupling_for_damping(m, cooling(0), tp * 5526, true, others);
    // frozen: g/2π for Γ_opt/2π = 5526 Hz at the dressed frequency, probe beam included
    CHECK_THAT(g / tp, WithinRel(301943.78, 1e-7));
    const OpticalMode beams[] = {cooling(g), probe()};
    const double w = shifted_frequency(m, beams);
    const OpticalMode cool_only[] = {cooling(g)};
    CHECK_THAT(gamma_opt(w, m, cool_only), WithinRel(tp * 5526, 1e-9));
    CHECK(coupling_for_damping(m, cooling(0), 0.0) == 0.0);
}

TEST_CASE("absorption heating is linear in g squared") {
    const AbsorptionCoefficients k{tp * 10.0, 1e-12};
    const double g2 = std::pow(tp * 3e5, 2);
    const auto h = absorption_model(g2, k, 300, 5e6);
    CHECK_THAT(h.absorption_temp_rise, WithinRel(1e-12 * g2, 1e-15));
    CHECK_THAT(h.absorption_freq_shift, WithinRel(-tp * 10.0 * 1e-12 * g2, 1e-15));
    CHECK_THAT(h.n_th_effective, WithinRel(5e6 * (300 + 1e-12 * g2) / 300, 1e-15));
    const auto h2 = absorption_model(4 * g2, k, 300, 5e6);
    CHECK_THAT(h2.absorption_temp_rise, WithinRel(4 * h.absorption_temp_rise, 1e-15));
    CHECK_THROWS_AS(absorption_model(g2, {-1, 0}, 300, 1), std::invalid_argument);
}
