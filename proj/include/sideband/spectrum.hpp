#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace sideband {

using cd = std::complex<double>;

enum class SpectrumUnits {
    quanta,              // shot noise = 1/2
    rad2_per_rad_s,      // frequency-noise spectra
    relative_intensity,  // (delta I / |a|^2)^2 per rad/s
    per_hz,              // raw estimator output, signal units^2 / Hz
    arbitrary
};

std::string to_string(SpectrumUnits u);
SpectrumUnits units_from_string(const std::string& s);

// Uniform frequency axis: omega_i = start + i * step, rad/s.
struct UniformAxis {
    double start = 0.0;
    double step = 1.0;
    std::size_t size = 0;

    double operator[](std::size_t i) const { return start + step * static_cast<double>(i); }
    double back() const { return (*this)[size - 1]; }

    // n points from lo to hi inclusive
    static UniformAxis span(double lo, double hi, std::size_t n);
    // 2m+1 points, symmetric about zero
    static UniformAxis symmetric(double step, std::size_t m);
};

// PSD (or any real spectrum) on a uniform two-sided axis.
// Integrals use the dω/2π measure.
struct SpectrumGrid {
    UniformAxis axis;
    std::vector<double> values;
    SpectrumUnits units = SpectrumUnits::arbitrary;

    SpectrumGrid() = default;
    SpectrumGrid(UniformAxis a, SpectrumUnits u);
    SpectrumGrid(UniformAxis a, std::vector<double> v, SpectrumUnits u);

    std::size_t size() const { return values.size(); }
    double omega(std::size_t i) const { return axis[i]; }

    // Index range [first, last) of bins inside [lo, hi].
    std::pair<std::size_t, std::size_t> index_range(double lo, double hi) const;
    // Linear interpolation; zero outside the axis.
    double interpolate(double w) const;
};

template <typename F>
SpectrumGrid tabulate(const UniformAxis& axis, SpectrumUnits units, F&& f) {
    SpectrumGrid g(axis, units);
    for (std::size_t i = 0; i < axis.size; ++i) g.values[i] = f(axis[i]);
    return g;
}

// Σ values · dω/2π over [lo, hi] (rectangle rule on the native bins).
double integrate(const SpectrumGrid& g, double lo, double hi);
double integrate(const SpectrumGrid& g);

// Complex response sampled on a strictly increasing grid.
struct ComplexResponse {
    std::vector<double> omega;
    std::vector<cd> values;

    ComplexResponse() = default;
    ComplexResponse(std::vector<double> w, std::vector<cd> v);
};

ComplexResponse evaluate(const std::vector<double>& omega, const std::function<cd(double)>& f);

}  // namespace sideband
