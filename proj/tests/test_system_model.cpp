#include <catch_amalgamated.hpp>

#include <cmath>

#include "sideband/system_model.hpp"
#include "sideband/units.hpp"

using namespace sideband;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {
const double tp = two_pi;
const double kc = tp * 14e6;
const double wm = tp * 1.167e6;
}  // namespace

TEST_CASE("cavity susceptibility matches its closed form") {
    const OpticalMode m(kc, -tp * 2e6, {0.9 * kc}, 0);
    for (double w : {-3e7, 0.0, 7.3e6}) {
        const cd expect = 1.0 / cd(kc / 2, -(m.detuning() + w));
        CHECK(std::abs(chi_cav(w, m) - expect) < 1e-15 * std::abs(expect));
        CHECK(std::abs(chi_cav_conj_neg(w, m) - std::conj(chi_cav(-w, m))) < 1e-15 * std::abs(expect));
    }
}

TEST_CASE("mechanical susceptibility is i/Gamma on resonance") {
    const MechanicalMode m(wm, wm / 1.8e8, 10);
    const cd x = chi_mech(wm, m);
    CHECK_THAT(x.imag(), WithinRel(1.0 / m.gamma(), 1e-12));
    CHECK_THAT(x.real(), WithinAbs(0.0, 1e-12 / m.gamma()));
    CHECK_THAT(m.quality_factor(), WithinRel(1.8e8, 1e-12));
}

TEST_CASE("magic detuning") {
    CHECK_THAT(magic_detuning(kc, -1), WithinRel(-kc / (2 * std::sqrt(3.0)), 1e-15));
    CHECK_THAT(magic_detuning(kc, +1), WithinRel(kc / (2 * std::sqrt(3.0)), 1e-15));
}

TEST_CASE("constructors enforce invariants") {
    CHECK_THROWS_AS(OpticalMode(kc, 0, {1.1 * kc}, 0), std::invalid_argument);
    CHECK_THROWS_AS(OpticalMode(-kc, 0, {}, 0), std::invalid_argument);
    CHECK_THROWS_AS(OpticalMode(kc, 0, {}, -1), std::invalid_argument);
    CHECK_THROWS_AS(MechanicalMode(wm, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(MechanicalMode(wm, 1, -1), std::invalid_argument);
    const OpticalMode m(kc, 0, {0.6 * kc, 0.3 * kc}, 0);
    const auto ports = m.all_ports();
    REQUIRE(ports.size() == 3);
    CHECK_THAT(ports[2], WithinRel(0.1 * kc, 1e-12));
    CHECK(OpticalMode(kc, 0, {}, 0).kappa1() == kc);
}

TEST_CASE("two-beam susceptibility reduces to the single-beam M factor form") {
    const MechanicalMode m(wm, wm / 1.8e8, 1);
    const OpticalMode cool(kc, magic_detuning(kc, -1), {0.9 * kc}, tp * 3e5);
    const OpticalMode dark(tp * 49.4e6, 0, {}, 0);
    for (double w : {wm * 0.99, wm, wm * 1.01, -wm}) {
        const cd a = chi_mech_modified(w, m, cool, dark);
        const cd b = chi_mech_single_beam(w, m, cool);
        CHECK(std::abs(a - b) < 1e-10 * std::abs(b));
    }
}

TEST_CASE("optical damping equals the anti-Stokes minus Stokes rates") {
    const MechanicalMode m(wm, wm / 1.8e8, 1);
    const double d = magic_detuning(kc, -1);
    const double g = tp * 3e5;
    const OpticalMode cool(kc, d, {0.9 * kc}, g);
    const OpticalMode beams[] = {cool};
    const double am = g * g * kc / (kc * kc / 4 + std::pow(d + wm, 2));
    const double ap = g * g * kc / (kc * kc / 4 + std::pow(d - wm, 2));
    CHECK_THAT(gamma_opt(wm, m, beams), WithinRel(am - ap, 1e-10));
}

TEST_CASE("shifted frequency is a fixed point of the spring equation") {
    const MechanicalMode m(wm, wm / 1.8e8, 1);
    const OpticalMode cool(kc, magic_detuning(kc, -1), {0.9 * kc}, tp * 3e5);
    const OpticalMode beams[] = {cool};
    const double w = shifted_frequency(m, beams);
    CHECK_THAT(w * w, WithinRel(wm * wm + 2 * w * spring_shift(w, m, beams), 1e-12));
    CHECK(w < wm);  // red detuning softens the mode
}
