#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "sideband/tin.hpp"
#include "sideband/units.hpp"

using namespace sideband;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {
const double tp = two_pi;
const double kc = tp * 14e6;

OpticalMode beam(double two_delta_over_kappa, double kappa = kc) {
    return OpticalMode(kappa, -two_delta_over_kappa * kappa / 2, {0.9 * kappa}, 0);
}
}  // namespace

TEST_CASE("static transduction coefficients") {
    const auto m = beam(1.34);
    const double d = m.detuning(), h = kc / 2, D = d * d + h * h;
    CHECK_THAT(tin_first_order_coeff(m), WithinRel(-2 * d / D, 1e-14));
    CHECK_THAT(tin_second_order_coeff(m), WithinRel((3 * d * d - h * h) / (D * D), 1e-14));
    CHECK_THAT(tin_cubic_coeff(m), WithinRel(-4 * d * (d * d - h * h) / (D * D * D), 1e-12));
    CHECK_THAT(tin_third_order_coeff(m, 0.0), WithinRel(0.5 * tin_cubic_coeff(m), 1e-15));
}

TEST_CASE("quadratic coefficient vanishes at the magic detuning") {
    const OpticalMode m(kc, magic_detuning(kc, -1), {}, 0);
    const double c2_off = std::abs(tin_second_order_coeff(beam(1.34)));
    CHECK(std::abs(tin_second_order_coeff(m)) < 1e-12 * c2_off);
    // frozen: cubic coefficient 1/(8Δ₀³) at Δ₀ = −κ/2√3
    const double d = m.detuning();
    CHECK_THAT(tin_cubic_coeff(m), WithinRel(1.0 / (8 * d * d * d), 1e-12));
    CHECK_THAT(tin_third_order_coeff(m, 0.0), WithinRel(-3.817e-24, 1e-3));
}

TEST_CASE("the intracavity intensity is the exact static expansion up to third order") {
    // I/|ā|² = D₀/D(δ) with D(δ) = (Δ₀+δ)² + (κ/2)²
    const auto m = beam(0.9);
    const double d0 = m.detuning(), h = kc / 2;
    const double D0 = d0 * d0 + h * h;
    auto remainder = [&](double x) {
        const double exact = D0 / ((d0 + x) * (d0 + x) + h * h) - 1;
        return exact - (tin_first_order_coeff(m) * x + tin_second_order_coeff(m) * x * x + tin_cubic_coeff(m) * x * x * x);
    };
    // what is left is fourth order: halving δ divides it by 16
    const double x = 1e-3 * kc;
    CHECK_THAT(remainder(x) / remainder(x / 2), WithinRel(16.0, 0.01));
    CHECK(std::abs(remainder(x)) < 0.01 * std::abs(tin_cubic_coeff(m) * x * x * x));
}

TEST_CASE("FFT convolution matches the direct double sum") {
    const auto noise = flat_frequency_noise(1.0, tp * 7e6, tp * 7e6 / 32);  // 65 points
    for (double x : {0.3, 1.0 / std::sqrt(3.0), 1.34}) {
        const auto a = tin_second_order_native(noise, beam(x), TinMethod::fft);
        const auto b = tin_second_order_native(noise, beam(x), TinMethod::direct);
        REQUIRE(a.size() == b.size());
        const double peak = *std::max_element(b.begin(), b.end());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-6 * peak);
    }
}

TEST_CASE("second-order TIN is even and nonnegative") {
    const auto noise = flat_frequency_noise(1.0, tp * 7e6, tp * 1e5);
    const auto s = tin_second_order_native(noise, beam(1.34), TinMethod::fft);
    const double peak = *std::max_element(s.begin(), s.end());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s[i] >= -1e-12 * peak);
        CHECK(std::abs(s[i] - s[s.size() - 1 - i]) <= 1e-9 * peak);
    }
}

TEST_CASE("fast-cavity limit is 2 c2^2 times the self-convolution of S") {
    const double kappa = kc * 1000;
    const auto m = beam(1.34, kappa);
    const auto noise = flat_frequency_noise(1.0, tp * 7e6, tp * 7e6 / 20);
    const auto s = tin_second_order_native(noise, m, TinMethod::direct);
    const auto& v = noise.grid.values;
    const long M = static_cast<long>(noise.half_size());
    const double c2 = tin_second_order_coeff(m);
    for (long n = -2 * M; n <= 2 * M; n += 7) {
        double conv = 0;
        for (long k = -M; k <= M; ++k)
            if (n - k >= -M && n - k <= M) conv += v[k + M] * v[n - k + M];
        conv *= noise.step() / tp;
        CHECK_THAT(s[n + 2 * M], WithinRel(2 * c2 * c2 * conv, 1e-4));
    }
}

TEST_CASE("printed and derived kernels differ only in the third term") {
    const auto m = beam(0.8);
    const double w = tp * 1.1e6, wp = tp * 3e6;
    const cd a = kernel_g(w, wp, m), b = kernel_g_printed(w, wp, m);
    const cd third_derived = -std::conj(chi_cav(-w, m)) * std::conj(chi_cav(-wp, m));
    const cd third_printed = -std::conj(chi_cav(-w, m)) * std::conj(chi_cav(wp, m));
    CHECK(std::abs((a - b) - (third_derived - third_printed)) < 1e-12 * std::abs(a));
    CHECK(std::abs(a - b) > 1e-3 * std::abs(a));
}

TEST_CASE("noise calibration hits the requested shot-noise ratio") {
    const auto m = beam(1.0 / std::sqrt(3.0));
    const auto noise = flat_frequency_noise(1.0, tp * 7e6, tp * 1e4);
    const double lo = tp * 1.12e6, hi = tp * 1.23e6;
    const auto cal = calibrate_noise_level(noise, m, lo, hi, 1e8, 0.15);
    TinOptions o;
    o.intracavity_photons = 1e8;
    o.band_lo = lo;
    o.band_hi = hi;
    const auto r = tin_second_order_psd(cal, m, UniformAxis::symmetric(tp * 1e4, 100), o);
    CHECK_THAT(r.shot_noise_ratio, WithinRel(0.15, 1e-10));
    CHECK(r.clipped_bins == 0);
}

TEST_CASE("flat noise carries half-weight edges") {
    const auto n = flat_frequency_noise(2.0, tp * 1e6, tp * 1e5);
    REQUIRE(n.grid.size() == 21);
    CHECK(n.grid.values.front() == 1.0);
    CHECK(n.grid.values[10] == 2.0);
    CHECK_THROWS_AS(flat_frequency_noise(-1, 1, 1), std::invalid_argument);
}

TEST_CASE("detuning sweep scales with photon number") {
    const auto noise = flat_frequency_noise(1.0, tp * 7e6, tp * 5e4);
    const double d[] = {-0.67 * kc};
    const auto a = tin_detuning_sweep(noise, beam(1.0), d, tp * 1e6, tp * 1.3e6, 1e8);
    const auto b = tin_detuning_sweep(noise, beam(1.0), d, tp * 1e6, tp * 1.3e6, 2e8);
    CHECK_THAT(b[0].ratio, WithinRel(2 * a[0].ratio, 1e-12));
    CHECK_THROWS(tin_detuning_sweep(noise, beam(1.0), d, tp * 1e6, tp * 1.3e6, 0));
}
