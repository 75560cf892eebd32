#include "sideband/tin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "sideband/diagnostics.hpp"
#include "sideband/fft.hpp"

namespace sideband {

void FrequencyNoiseSpectrum::validate() const {
    const auto& a = grid.axis;
    if (a.size % 2 != 1) throw std::invalid_argument("frequency noise axis must have 2M+1 points");
    if (std::abs(a.start + a.step * static_cast<double>(a.size / 2)) > 1e-9 * a.step)
        throw std::invalid_argument("frequency noise axis must be symmetric about zero");
    for (double v : grid.values)
        if (!(v >= 0)) throw std::invalid_argument("frequency noise spectrum must be >= 0");
    if (!(band_limit >= 0)) throw std::invalid_argument("band_limit must be >= 0");
}

FrequencyNoiseSpectrum flat_frequency_noise(double level, double band_limit, double step) {
    if (!(level >= 0) || !(band_limit > 0) || !(step > 0))
        throw std::invalid_argument("flat noise needs level >= 0, band_limit > 0, step > 0");
    const auto m = static_cast<std::size_t>(std::llround(band_limit / step));
    if (std::abs(static_cast<double>(m) * step - band_limit) > 1e-9 * band_limit)
        warn("flat noise: band limit is not a multiple of the step; edge moved to " +
             std::to_string(static_cast<double>(m) * step));
    FrequencyNoiseSpectrum n{SpectrumGrid(UniformAxis::symmetric(step, m), SpectrumUnits::rad2_per_rad_s),
                             static_cast<double>(m) * step};
    std::fill(n.grid.values.begin(), n.grid.values.end(), level);
    n.grid.values.front() *= 0.5;
    n.grid.values.back() *= 0.5;
    return n;
}

FrequencyNoiseSpectrum frequency_noise_from(const SpectrumGrid& grid) {
    const auto& a = grid.axis;
    const double reach = std::max(std::abs(a.start), std::abs(a.back()));
    const auto m = static_cast<std::size_t>(std::floor(reach / a.step + 1e-9));
    const UniformAxis sym = UniformAxis::symmetric(a.step, m);
    FrequencyNoiseSpectrum n{SpectrumGrid(sym, SpectrumUnits::rad2_per_rad_s), 0.0};
    const double shift = a.start / a.step - std::round(a.start / a.step);
    const bool aligned = std::abs(shift) < 1e-9 && a.size == sym.size;
    if (aligned) {
        n.grid.values = grid.values;
    } else {
        warn("frequency noise: input grid is not symmetric about zero; resampled by linear interpolation");
        for (std::size_t i = 0; i < sym.size; ++i) {
            // symmetrise so the classical spectrum stays even
            const double w = sym[i];
            n.grid.values[i] = 0.5 * (grid.interpolate(w) + grid.interpolate(-w));
        }
    }
    for (std::size_t i = 0; i < sym.size; ++i)
        if (n.grid.values[i] > 0) n.band_limit = std::max(n.band_limit, std::abs(sym[i]));
    n.validate();
    return n;
}

FrequencyNoiseSpectrum scaled(const FrequencyNoiseSpectrum& noise, double factor) {
    FrequencyNoiseSpectrum out = noise;
    for (double& v : out.grid.values) v *= factor;
    return out;
}

cd kernel_g(double w, double wp, const OpticalMode& mode) {
    const auto L = [&](double x) { return chi_cav(x, mode); };
    const auto Lc = [&](double x) { return std::conj(chi_cav(x, mode)); };
    return Lc(wp - w) * L(wp) - L(w) * L(wp) - Lc(-w) * Lc(-wp);
}

cd kernel_g_printed(double w, double wp, const OpticalMode& mode) {
    const auto L = [&](double x) { return chi_cav(x, mode); };
    const auto Lc = [&](double x) { return std::conj(chi_cav(x, mode)); };
    return Lc(wp - w) * L(wp) - L(w) * L(wp) - Lc(-w) * Lc(wp);
}

namespace {
double detuning_denominator(const OpticalMode& m) {
    const double h = m.kappa() / 2;
    return m.detuning() * m.detuning() + h * h;
}
}  // namespace

double tin_first_order_coeff(const OpticalMode& mode) {
    return -2.0 * mode.detuning() / detuning_denominator(mode);
}

double tin_second_order_coeff(const OpticalMode& mode) {
    const double d = mode.detuning();
    const double h = mode.kappa() / 2;
    const double D = detuning_denominator(mode);
    return (3 * d * d - h * h) / (D * D);
}

double tin_third_order_coeff(const OpticalMode& mode, double omega) {
    const cd x = chi_cav(omega, mode);
    const cd i(0, 1);
    return (i * std::norm(x) * x - i * x * x * x).real();
}

double tin_cubic_coeff(const OpticalMode& mode) { return 2.0 * tin_third_order_coeff(mode, 0.0); }

namespace {

std::vector<double> native_direct(const FrequencyNoiseSpectrum& noise, const OpticalMode& mode) {
    const long M = static_cast<long>(noise.half_size());
    const double dw = noise.step();
    const auto& s = noise.grid.values;
    std::vector<double> out(static_cast<std::size_t>(4 * M + 1), 0.0);
    for (long n = -2 * M; n <= 2 * M; ++n) {
        const double w = static_cast<double>(n) * dw;
        cd acc = 0.0;
        for (long m = -M; m <= M; ++m) {
            const long r = n - m;
            if (r < -M || r > M) continue;
            const double weight = s[static_cast<std::size_t>(r + M)] * s[static_cast<std::size_t>(m + M)];
            if (weight == 0) continue;
            const double wp = static_cast<double>(m) * dw;
            acc += weight * kernel_g(w, wp, mode) * (kernel_g(-w, -wp, mode) + kernel_g(-w, wp - w, mode));
        }
        out[static_cast<std::size_t>(n + 2 * M)] = acc.real() * dw / (2 * M_PI);
    }
    return out;
}

// Symmetrised kernel written as Σ_t α_t(ω) u_t(ω′) v_t(ω − ω′) with
// u ∈ {χ(ω′), χ*(−ω′), 1}, v ∈ {χ*(−x), χ(x), 1}; S = 2 ∫ S S |K_s|² dω′/2π.
std::vector<double> native_fft(const FrequencyNoiseSpectrum& noise, const OpticalMode& mode) {
    const std::size_t M = noise.half_size();
    const std::size_t n_in = 2 * M + 1;
    const std::size_t n_out = 4 * M + 1;
    const std::size_t P = fft::next_pow2(n_out);
    const double dw = noise.step();
    const auto& s = noise.grid.values;

    std::array<std::vector<cd>, 3> u, v;
    for (auto& x : u) x.assign(n_in, 1.0);
    for (auto& x : v) x.assign(n_in, 1.0);
    for (std::size_t j = 0; j < n_in; ++j) {
        const double w = (static_cast<double>(j) - static_cast<double>(M)) * dw;
        u[0][j] = chi_cav(w, mode);
        u[1][j] = std::conj(chi_cav(-w, mode));
        v[0][j] = std::conj(chi_cav(-w, mode));
        v[1][j] = chi_cav(w, mode);
    }

    struct Term {
        int u, v, cls;
    };
    constexpr std::array<Term, 6> terms{{{0, 0, 0}, {1, 1, 0}, {0, 2, 1}, {2, 1, 1}, {1, 2, 2}, {2, 0, 2}}};

    auto transformed = [&](const std::array<std::vector<cd>, 3>& f, int p, int q) {
        ComplexBuffer buf(P, cd(0.0));
        for (std::size_t j = 0; j < n_in; ++j) buf[j] = s[j] * f[p][j] * std::conj(f[q][j]);
        fft::forward(buf);
        return buf;
    };
    std::array<std::array<ComplexBuffer, 3>, 3> FA, FB;
    for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
            FA[p][q] = transformed(u, p, q);
            FB[p][q] = transformed(v, p, q);
        }

    std::array<std::array<ComplexBuffer, 3>, 3> group;
    for (auto& row : group)
        for (auto& g : row) g.assign(P, cd(0.0));
    for (const auto& t : terms)
        for (const auto& tp : terms) {
            auto& g = group[t.cls][tp.cls];
            const auto& a = FA[t.u][tp.u];
            const auto& b = FB[t.v][tp.v];
            for (std::size_t k = 0; k < P; ++k) g[k] += a[k] * b[k];
        }
    for (auto& row : group)
        for (auto& g : row) fft::inverse(g);

    std::vector<double> out(n_out);
    const double scale = 2.0 * dw / (2 * M_PI) / static_cast<double>(P);
    for (std::size_t n = 0; n < n_out; ++n) {
        const double w = (static_cast<double>(n) - 2.0 * static_cast<double>(M)) * dw;
        const std::array<cd, 3> alpha{cd(0.5), -0.5 * chi_cav(w, mode), -0.5 * std::conj(chi_cav(-w, mode))};
        cd acc = 0.0;
        for (int c = 0; c < 3; ++c)
            for (int cp = 0; cp < 3; ++cp) acc += alpha[c] * std::conj(alpha[cp]) * group[c][cp][n];
        out[n] = acc.real() * scale;
    }
    return out;
}

double band_average(const std::vector<double>& native, std::size_t M, double dw, double lo, double hi) {
    if (!(hi >= lo) || lo < 0) throw std::invalid_argument("TIN band must satisfy 0 <= lo <= hi");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < native.size(); ++n) {
        const double w = (static_cast<double>(n) - 2.0 * static_cast<double>(M)) * dw;
        if (w >= lo - 1e-9 * dw && w <= hi + 1e-9 * dw) {
            sum += native[n];
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("TIN band contains no frequency bins");
    return sum / static_cast<double>(count);
}

}  // namespace

std::vector<double> tin_second_order_native(const FrequencyNoiseSpectrum& noise, const OpticalMode& mode,
                                            TinMethod method) {
    noise.validate();
    return method == TinMethod::direct ? native_direct(noise, mode) : native_fft(noise, mode);
}

TinSpectrumResult tin_second_order_psd(const FrequencyNoiseSpectrum& noise, const OpticalMode& mode,
                                       const UniformAxis& output, const TinOptions& options) {
    auto native = tin_second_order_native(noise, mode, options.method);
    const std::size_t M = noise.half_size();
    const double dw = noise.step();

    TinSpectrumResult r;
    r.third_order_coeff = tin_third_order_coeff(mode, 0.0);
    double peak = 0.0;
    for (double& x : native) {
        peak = std::max(peak, x);
        if (x < 0) {
            r.most_negative = std::min(r.most_negative, x);
            ++r.clipped_bins;
            x = 0.0;
        }
    }
    if (r.clipped_bins > 0 && -r.most_negative > 1e-9 * peak)
        warn("TIN spectrum: clipped " + std::to_string(r.clipped_bins) + " negative bins, most negative " +
             std::to_string(r.most_negative) + " vs peak " + std::to_string(peak));

    if (options.intracavity_photons > 0 && options.band_hi > 0)
        r.shot_noise_ratio = mode.kappa1() * options.intracavity_photons *
                             band_average(native, M, dw, options.band_lo, options.band_hi);

    const SpectrumGrid native_grid(UniformAxis{-2.0 * static_cast<double>(M) * dw, dw, native.size()}, native,
                                   SpectrumUnits::relative_intensity);
    const double ratio = output.step / dw;
    const double offset = output.start / dw;
    const bool commensurate = std::abs(ratio - std::round(ratio)) < 1e-9 && std::round(ratio) >= 1 &&
                              std::abs(offset - std::round(offset)) < 1e-9;
    r.second_order = SpectrumGrid(output, SpectrumUnits::relative_intensity);
    if (commensurate) {
        const long stride = std::lround(ratio);
        const long first = std::lround(offset) + 2 * static_cast<long>(M);
        for (std::size_t i = 0; i < output.size; ++i) {
            const long idx = first + stride * static_cast<long>(i);
            if (idx >= 0 && idx < static_cast<long>(native.size()))
                r.second_order.values[i] = native[static_cast<std::size_t>(idx)];
        }
    } else {
        r.resampled = true;
        warn("TIN spectrum: output grid is not commensurate with the noise grid; linear interpolation used");
        for (std::size_t i = 0; i < output.size; ++i) r.second_order.values[i] = native_grid.interpolate(output[i]);
    }
    return r;
}

std::vector<TinSweepPoint> tin_detuning_sweep(const FrequencyNoiseSpectrum& noise, const OpticalMode& mode_template,
                                              std::span<const double> detunings, double band_lo, double band_hi,
                                              double intracavity_photons, TinMethod method) {
    if (!(intracavity_photons > 0)) throw std::invalid_argument("TIN sweep needs a positive intracavity photon number");
    std::vector<TinSweepPoint> out;
    out.reserve(detunings.size());
    for (double d : detunings) {
        const OpticalMode m = mode_template.with_detuning(d);
        const auto native = tin_second_order_native(noise, m, method);
        const double avg = band_average(native, noise.half_size(), noise.step(), band_lo, band_hi);
        out.push_back({d, m.kappa1() * intracavity_photons * avg});
    }
    return out;
}

FrequencyNoiseSpectrum calibrate_noise_level(const FrequencyNoiseSpectrum& noise, const OpticalMode& mode,
                                             double band_lo, double band_hi, double intracavity_photons,
                                             double target_ratio) {
    const double d = mode.detuning();
    const auto now = tin_detuning_sweep(noise, mode, std::span<const double>(&d, 1), band_lo, band_hi,
                                        intracavity_photons);
    if (!(now.front().ratio > 0)) throw std::invalid_argument("cannot calibrate a zero TIN spectrum");
    // output is quadratic in S_ΔΔ
    return scaled(noise, std::sqrt(target_ratio / now.front().ratio));
}

}  // namespace sideband
