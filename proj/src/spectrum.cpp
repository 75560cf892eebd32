#include "sideband/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sideband {

std::string to_string(SpectrumUnits u) {
    switch (u) {
    case SpectrumUnits::quanta: return "quanta";
    case SpectrumUnits::rad2_per_rad_s: return "rad2_per_rad_s";
    case SpectrumUnits::relative_intensity: return "relative_intensity";
    case SpectrumUnits::per_hz: return "per_hz";
    case SpectrumUnits::arbitrary: return "arbitrary";
    }
    return "arbitrary";
}

SpectrumUnits units_from_string(const std::string& s) {
    for (auto u : {SpectrumUnits::quanta, SpectrumUnits::rad2_per_rad_s, SpectrumUnits::relative_intensity,
                   SpectrumUnits::per_hz, SpectrumUnits::arbitrary})
        if (to_string(u) == s) return u;
    throw std::invalid_argument("unknown spectrum units: " + s);
}

UniformAxis UniformAxis::span(double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo)) throw std::invalid_argument("axis span needs n >= 2 and hi > lo");
    return {lo, (hi - lo) / static_cast<double>(n - 1), n};
}

UniformAxis UniformAxis::symmetric(double step, std::size_t m) {
    if (!(step > 0)) throw std::invalid_argument("axis step must be positive");
    return {-step * static_cast<double>(m), step, 2 * m + 1};
}

SpectrumGrid::SpectrumGrid(UniformAxis a, SpectrumUnits u) : SpectrumGrid(a, std::vector<double>(a.size, 0.0), u) {}

SpectrumGrid::SpectrumGrid(UniformAxis a, std::vector<double> v, SpectrumUnits u)
    : axis(a), values(std::move(v)), units(u) {
    if (!(axis.step > 0)) throw std::invalid_argument("spectrum axis must be strictly increasing");
    if (values.size() != axis.size) throw std::invalid_argument("spectrum values length differs from axis length");
}

std::pair<std::size_t, std::size_t> SpectrumGrid::index_range(double lo, double hi) const {
    const double a = std::ceil((lo - axis.start) / axis.step - 1e-9);
    const double b = std::floor((hi - axis.start) / axis.step + 1e-9);
    const auto n = static_cast<double>(axis.size);
    const auto first = static_cast<std::size_t>(std::clamp(a, 0.0, n));
    const auto last = static_cast<std::size_t>(std::clamp(b + 1.0, 0.0, n));
    return {first, std::max(first, last)};
}

double SpectrumGrid::interpolate(double w) const {
    const double x = (w - axis.start) / axis.step;
    if (x < 0.0 || x > static_cast<double>(axis.size - 1)) return 0.0;
    const auto i = std::min(static_cast<std::size_t>(x), axis.size - 2);
    const double f = x - static_cast<double>(i);
    return values[i] * (1.0 - f) + values[i + 1] * f;
}

double integrate(const SpectrumGrid& g, double lo, double hi) {
    auto [a, b] = g.index_range(lo, hi);
    double s = 0.0;
    for (auto i = a; i < b; ++i) s += g.values[i];
    return s * g.axis.step / (2.0 * M_PI);
}

double integrate(const SpectrumGrid& g) {
    double s = 0.0;
    for (double v : g.values) s += v;
    return s * g.axis.step / (2.0 * M_PI);
}

ComplexResponse::ComplexResponse(std::vector<double> w, std::vector<cd> v) : omega(std::move(w)), values(std::move(v)) {
    if (omega.size() != values.size()) throw std::invalid_argument("response values length differs from grid length");
    for (std::size_t i = 1; i < omega.size(); ++i)
        if (!(omega[i] > omega[i - 1])) throw std::invalid_argument("response grid must be strictly increasing");
}

ComplexResponse evaluate(const std::vector<double>& omega, const std::function<cd(double)>& f) {
    std::vector<cd> v(omega.size());
    std::transform(omega.begin(), omega.end(), v.begin(), f);
    return ComplexResponse(omega, std::move(v));
}

}  // namespace sideband
