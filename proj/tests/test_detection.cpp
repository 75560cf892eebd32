#include <catch_amalgamated.hpp>

#include <cmath>

#include "sideband/diagnostics.hpp"
#include "sideband/cooling.hpp"
#include "sideband/detection.hpp"
#include "sideband/units.hpp"

using namespace sideband;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {
const double tp = two_pi;
const double kc = tp * 14e6;
const double kp = tp * 49.4e6;
const double wm = tp * 1.167e6;

OpticalMode probe_beam() { return OpticalMode(kp, magic_detuning(kp, -1), {0.9 * kp}, tp * 100e3); }

// Cooled defect mode at occupancy n, no frequency noise unless asked.
OpticalSystem system_at(double n, double tin_ratio = 0.0) {
    const MechanicalMode m0(wm, wm / 1.8e8, 0, true);
    const OpticalMode p = probe_beam();
    const OpticalMode others[] = {p};
    const OpticalMode c(kc, magic_detuning(kc, -1), {0.9 * kc},
                        coupling_for_damping(m0, OpticalMode(kc, magic_detuning(kc, -1), {0.9 * kc}, 0), tp * 5526,
                                             true, others));
    HeatingBudget h;
    h.tin_force_psd = tin_force_psd_from_ratio(tin_ratio, c);
    const BackactionReport reps[] = {backaction(m0, c), backaction(m0, p)};
    const auto base = effective_occupancy(reps, m0, h);
    h.n_th_effective = std::max(0.0, (n - base.n_eff) * base.gamma_total / m0.gamma());
    return OpticalSystem{m0.with_n_th(h.n_th_effective), c, p, h, 1e6, {}, 0.0, 0.8};
}
}  // namespace

TEST_CASE("cavity asymmetry factor at the default probe settings") {
    // hand-derived s(Ω′) at Ω′/2π = 1.167 MHz, κ_p/2π = 49.4 MHz, Δ_p = −κ_p/2√3
    CHECK_THAT(asymmetry_factor(wm, probe_beam()), WithinAbs(0.9215, 1e-4));
    const OpticalMode resonant(kp, 0, {}, 0);
    CHECK_THAT(asymmetry_factor(wm, resonant), WithinRel(1.0, 1e-15));
}

TEST_CASE("occupancy from asymmetry and its alternate labelling") {
    const double s = 0.92;
    const auto e = occupancy_from_asymmetry(s * 10.5 / 9.5, s);
    CHECK_THAT(e.n, WithinRel(9.5, 1e-12));
    CHECK_THAT(e.n_alternate, WithinRel(-9.5, 1e-12));
    CHECK_FALSE(e.orientation_mismatch);
    const auto flipped = occupancy_from_asymmetry(s * 9.5 / 10.5, s);
    CHECK(flipped.orientation_mismatch);
    CHECK_THAT(flipped.n_alternate, WithinRel(10.5, 1e-12));
    CHECK(occupancy_from_asymmetry(s, s).infinite);
    CHECK_THROWS_AS(occupancy_from_asymmetry(-1, s), std::invalid_argument);
}

TEST_CASE("probe output is shot-noise limited away from the sidebands") {
    const auto sys = system_at(9.5);
    const auto axis = UniformAxis::span(tp * 3e6, tp * 3.1e6, 11);
    const auto s = probe_output_psd(axis, sys);
    for (double v : s.values) CHECK_THAT(v, WithinAbs(0.5, 1e-4));
}

TEST_CASE("closed-form probe PSD agrees with the full network near the sidebands") {
    const auto sys = system_at(9.5);
    const OpticalMode beams[] = {sys.cooling, sys.probe};
    const double wp = shifted_frequency(sys.mode, beams);
    for (double c : {wp, -wp}) {
        const auto axis = UniformAxis::span(c - tp * 20e3, c + tp * 20e3, 81);
        const auto a = probe_output_psd(axis, sys);
        const auto b = probe_output_psd_network(axis, sys);
        for (std::size_t i = 0; i < axis.size; ++i) CHECK_THAT(a.values[i] - 0.5, WithinRel(b.values[i] - 0.5, 1e-6));
    }
}

TEST_CASE("analytic sideband asymmetry round trip") {
    const double n = 9.5;
    const auto sys = system_at(n);
    const OpticalMode beams[] = {sys.cooling, sys.probe};
    const double wp = shifted_frequency(sys.mode, beams);
    const auto axis = UniformAxis::span(-wp - tp * 60e3, wp + tp * 60e3, 2 * 117000 + 1);
    const auto psd = probe_output_psd(axis, sys);
    SidebandOptions o;
    o.floor = 0.5;
    const auto pair = sideband_ratio(psd, wp, tp * 50e3, o);
    const auto occ = occupancy_from_asymmetry(pair.ratio, asymmetry_factor(wp, sys.probe));
    // the asymmetry counts quanta of the dressed oscillator: (n + 1/2) Ω_m/Ω′ − 1/2
    CHECK_THAT(occ.n, WithinRel((n + 0.5) * wm / wp - 0.5, 0.005));
    CHECK(pair.ratio > 1);
}

TEST_CASE("a transduction weight removes the tilt across each line") {
    // both lines carry equal area before a curved weight tilts them; a linear tilt would cancel
    const double wp = tp * 1e6, gam = tp * 20e3;
    const auto weight = [&](double w) { return 1 + w / wp + (w / wp) * (w / wp); };
    const auto axis = UniformAxis::span(-tp * 1.3e6, tp * 1.3e6, 52001);
    const SpectrumGrid g = tabulate(axis, SpectrumUnits::quanta, [&](double w) {
        auto lor = [&](double c) { return (gam / 2) / M_PI / ((w - c) * (w - c) + gam * gam / 4); };
        return 0.5 + weight(w) * (lor(wp) + lor(-wp));
    });
    SidebandOptions o;
    o.floor = 0.5;
    const double plain = sideband_ratio(g, wp, tp * 200e3, o).ratio;
    o.weight = weight;
    const double weighted = sideband_ratio(g, wp, tp * 200e3, o).ratio;
    CHECK_THAT(weighted, WithinRel(3.0, 1e-6));
    CHECK(std::abs(plain - weighted) > 1e-3);
}

TEST_CASE("sideband_ratio masks and floors") {
    const auto axis = UniformAxis::span(-tp * 2e6, tp * 2e6, 40001);
    SpectrumGrid g = tabulate(axis, SpectrumUnits::quanta, [](double w) {
        const double wp = tp * 1e6, gam = tp * 5e3;
        auto lor = [&](double c, double a) { return a * (gam / 2) * (gam / 2) / ((w - c) * (w - c) + (gam / 2) * (gam / 2)); };
        return 0.5 + lor(wp, 2.0) + lor(-wp, 1.0);
    });
    const auto p = sideband_ratio(g, tp * 1e6, tp * 100e3);
    CHECK_THAT(p.ratio, WithinRel(2.0, 1e-2));
    CHECK_THAT(p.floor, WithinAbs(0.5, 1e-2));
    SidebandOptions o;
    o.masks = {{tp * 0.95e6, tp * 1.05e6}};
    CHECK_THROWS_AS(sideband_ratio(g, tp * 1e6, tp * 40e3, o), std::invalid_argument);
}

TEST_CASE("dual-homodyne reconstruction inverts the chain model") {
    const auto sys = system_at(9.5, 0.15);
    const DetectionChain c1{0.0, 0.4}, c2{-M_PI / 3, 0.4};
    const OpticalMode beams[] = {sys.cooling, sys.probe};
    const double wp = shifted_frequency(sys.mode, beams);
    const auto axis = UniformAxis::span(-wp - tp * 20e3, -wp + tp * 20e3, 41);
    const auto p1 = homodyne_psd(axis, c1, sys, 0);
    const auto p2 = homodyne_psd(axis, c2, sys, 1);
    const auto x = homodyne_cross_psd(axis, c1, c2, sys);
    const auto rec = dual_homodyne_reconstruct(p1, p2, x, c1, c2);
    const auto truth = probe_output_psd_network(axis, sys);
    for (std::size_t i = 0; i < axis.size; ++i) CHECK_THAT(rec.field.values[i], WithinRel(truth.values[i], 1e-9));
    CHECK_THAT(rec.conditioning, WithinRel(4.0 / 3.0, 1e-12));
}

TEST_CASE("degenerate quadratures are ill-conditioned") {
    const auto axis = UniformAxis::span(0, 1, 3);
    const SpectrumGrid p(axis, {0.5, 0.5, 0.5}, SpectrumUnits::quanta);
    const CrossSpectrum x{axis, {0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(dual_homodyne_reconstruct(p, p, x, DetectionChain{0.1, 0.5}, DetectionChain{0.1 + 1e-4, 0.5}),
                    IllConditioned);
}

TEST_CASE("cooling-beam TIN interference is real and vanishes without TIN") {
    const auto quiet = system_at(9.5, 0.0);
    const auto noisy = system_at(9.5, 0.15);
    const auto axis = UniformAxis::span(tp * 1.1e6, tp * 1.2e6, 21);
    for (double v : cooling_tin_interference(axis, quiet).values) CHECK_THAT(v, WithinAbs(0.0, 1e-15));
    double total = 0;
    for (double v : cooling_tin_interference(axis, noisy).values) total += std::abs(v);
    CHECK(total > 0);
}
