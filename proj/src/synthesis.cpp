#include "sideband/synthesis.hpp"

#include <cmath>
#include <stdexcept>

#include "sideband/diagnostics.hpp"
#include "sideband/fft.hpp"
#include "sideband/fitting.hpp"

namespace sideband {

void SynthesisSetup::validate() const {
    if (!(fs > 0)) throw std::invalid_argument("synthesis.fs must be > 0");
    if (n_samples < 16) throw std::invalid_argument("synthesis.n_samples must be >= 16");
    if (tin_order < 2 || tin_order > 3) throw std::invalid_argument("synthesis.tin_order must be 2 or 3");
    if (tin_band_hi > tin_band_lo && tin_band_lo < 0)
        throw std::invalid_argument("synthesis TIN band must lie at non-negative frequencies");
    if (!(gain_ratio > 0)) throw std::invalid_argument("synthesis.gain_ratio must be > 0");
    if (!(cooling_eta >= 0 && cooling_eta <= 1)) throw std::invalid_argument("synthesis.cooling_eta must lie in [0, 1]");
    for (const auto& c : chains) c.validate();
    ensemble.validate();
    system.heating.validate();
}

OpticalSystem analytic_system(const SynthesisSetup& s) {
    OpticalSystem sys = s.system;
    sys.probe_frequency_noise = [ens = s.ensemble, fs = s.fs](double w) { return ens.sampled_psd(w, fs); };
    return sys;
}

SpectrumGrid expected_chain_psd(const OpticalSystem& system, const DetectionChain& chain, int index, double gain,
                                double fs, const WelchOptions& options) {
    const Network net(system);
    return expected_welch(
        [&](double w) { return gain * gain * net.psd(net.chain(w, chain, index), w); }, fs, options);
}

namespace {

using Complex = std::complex<double>;

// Circular complex white noise with E|X_k|² = var for every DFT bin.
void fill_complex(ComplexBuffer& x, std::mt19937_64 rng, double var) {
    std::normal_distribution<double> normal;
    const double a = std::sqrt(0.5 * var);
    for (auto& v : x) {
        const double re = normal(rng);
        v = a * Complex(re, normal(rng));
    }
}

// Half spectrum k = 0..n/2 of a real process with PSD psd(ω_k).
template <typename F>
void fill_real_half(Complex* x, std::size_t n, double fs, std::mt19937_64 rng, F&& psd) {
    std::normal_distribution<double> normal;
    const double nfs = static_cast<double>(n) * fs;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double s = psd(2 * M_PI * fs * static_cast<double>(k) / static_cast<double>(n));
        if (k == 0 || 2 * k == n) {
            x[k] = std::sqrt(nfs * s) * normal(rng);
        } else {
            const double re = normal(rng);
            x[k] = std::sqrt(0.5 * nfs * s) * Complex(re, normal(rng));
        }
    }
}

// Value at full-spectrum bin k of a real series stored as a half spectrum.
Complex full_bin(const Complex* half, std::size_t k, std::size_t n) {
    return k <= n / 2 ? half[k] : std::conj(half[n - k]);
}

double sinc(double x) { return x == 0 ? 1.0 : std::sin(x) / x; }

// −√2 g [χ(−ω) w(ω) + χ(ω)^* w(−ω)^*] at the non-negative bins, added to f.
void add_backaction(Complex* f, const ComplexBuffer& w, const OpticalMode& beam, double fs) {
    const std::size_t n = w.size();
    const double g = beam.g();
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double om = fft::bin_omega(k, n, fs);
        const Complex wm = w[(n - k) % n];
        f[k] += -std::sqrt(2.0) * g * (chi_cav(-om, beam) * w[k] + std::conj(chi_cav(om, beam)) * std::conj(wm));
    }
}

// v1 and w = √κ₁ v1 + √κ_l v2 for one beam.
std::pair<ComplexBuffer, ComplexBuffer> beam_vacuum(const OpticalMode& beam, std::size_t n, double fs,
                                                     std::uint64_t seed, Stream s1, Stream s2) {
    const double var = static_cast<double>(n) * fs * 0.5;
    ComplexBuffer v1(n), w(n);
    fill_complex(v1, substream(seed, s1), var);
    fill_complex(w, substream(seed, s2), var);
    const double k1 = std::sqrt(beam.kappa1());
    const double kl = std::sqrt(std::max(beam.kappa() - beam.kappa1(), 0.0));
    for (std::size_t k = 0; k < n; ++k) w[k] = k1 * v1[k] + kl * w[k];
    return {std::move(v1), std::move(w)};
}

TimeSeries detect(const ComplexBuffer& a, double fs, double theta, double eta, std::uint64_t seed, Stream vac) {
    auto rng = substream(seed, vac);
    std::normal_distribution<double> normal;
    const Complex rot = std::polar(1.0, -theta);
    const double amp = std::sqrt(2.0 * eta);
    const double vac_sd = std::sqrt((1.0 - eta) * 0.5 * fs);
    TimeSeries x{fs, RealBuffer(a.size()), 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) x.samples[i] = amp * (rot * a[i]).real() + vac_sd * normal(rng);
    return x;
}

}  // namespace

SynthesisOutput synth_photocurrents(const SynthesisSetup& s) {
    s.validate();
    const std::size_t n = s.n_samples;
    const double fs = s.fs;
    const double nd = static_cast<double>(n);
    const OpticalSystem& sys = s.system;
    const MechanicalMode& mode = sys.mode;
    const std::array<OpticalMode, 2> beams{sys.cooling, sys.probe};

    SynthesisOutput out;
    out.omega_shifted = shifted_frequency(mode, beams);
    out.gamma_opt = gamma_opt(out.omega_shifted, mode, beams);

    // TIN amplitude quadrature of the cooling beam, kept as a half spectrum
    RealBuffer tin_buf(fft::inplace_size(n), 0.0);
    Complex* xt = fft::as_complex(tin_buf);
    const double target = sys.heating.tin_force_psd;
    const double gamma_total = mode.gamma() + out.gamma_opt;
    double band_lo = s.tin_band_lo, band_hi = s.tin_band_hi;
    if (!(band_hi > band_lo)) {
        band_lo = out.omega_shifted - 4 * gamma_total;
        band_hi = out.omega_shifted + 4 * gamma_total;
    }
    {
        const TimeSeries delta = synth_frequency_noise(s.ensemble, fs, n, s.seed);
        const auto tr =
            transduce_fast_cavity(delta, sys.cooling, s.tin_order, {false, s.ensemble.highest_frequency()});
        out.fast_cavity_ratio = s.ensemble.modes.empty() ? INFINITY : tr.fast_cavity_ratio;
        if (target > 0) {
            std::copy(tr.intensity.samples.begin(), tr.intensity.samples.end(), tin_buf.begin());
            fft::forward_real_inplace(tin_buf, n);
            double level = 0;
            std::size_t count = 0;
            for (std::size_t k = 1; k < n / 2; ++k) {
                const double w = fft::bin_omega(k, n, fs);
                if (w >= band_lo && w <= band_hi) {
                    level += std::norm(xt[k]) / (nd * fs);
                    ++count;
                }
            }
            if (count == 0) throw InputError("synthesis: TIN band contains no frequency bins");
            level /= static_cast<double>(count);
            if (!(level > 0)) throw InputError("synthesis: TIN requested but the frequency-noise ensemble produces none");
            out.tin_scale = std::sqrt(target / level);
            for (std::size_t k = 0; k <= n / 2; ++k) xt[k] *= out.tin_scale;

            const double half = 2.0 * gamma_total;
            double local = 0;
            std::size_t lc = 0;
            for (std::size_t k = 1; k < n / 2; ++k) {
                const double w = fft::bin_omega(k, n, fs);
                if (std::abs(w - out.omega_shifted) <= half) {
                    local += std::norm(xt[k]) / (nd * fs);
                    ++lc;
                }
            }
            out.tin_level_at_peak = lc > 0 ? local / static_cast<double>(lc) / target : 0.0;
        }
    }

    // vacuum inputs of the probe (and of the cooling beam when its output is recorded)
    auto [pv1, pw] = beam_vacuum(sys.probe, n, fs, s.seed, Stream::probe_vac1, Stream::probe_vac2);
    ComplexBuffer cv1, cw;
    if (s.cooling_stream)
        std::tie(cv1, cw) = beam_vacuum(sys.cooling, n, fs, s.seed, Stream::cooling_vac1, Stream::cooling_vac2);

    // external force on the defect mode
    RealBuffer force_buf(fft::inplace_size(n), 0.0);
    Complex* fk = fft::as_complex(force_buf);
    if (s.cooling_stream) {
        add_backaction(fk, cw, sys.cooling, fs);
    } else {
        const OpticalMode& c = sys.cooling;
        fill_real_half(fk, n, fs, substream(s.seed, Stream::cooling_vac1), [&](double w) {
            return c.g() * c.g() * c.kappa() * (std::norm(chi_cav(w, c)) + std::norm(chi_cav(-w, c)));
        });
    }
    add_backaction(fk, pw, sys.probe, fs);
    const double h = 1.0 / fs;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        if (target > 0) fk[k] += -2.0 * sys.cooling.g() * xt[k];
        const double sc = sinc(0.5 * fft::bin_omega(k, n, fs) * h);
        fk[k] /= sc * sc;  // first-order hold in the integrator
    }
    fft::inverse_real_inplace(force_buf, n);
    for (std::size_t i = 0; i < n; ++i) force_buf[i] /= nd;

    RealBuffer q_buf(fft::inplace_size(n), 0.0);
    {
        DefectForces f;
        f.thermal_seed = s.seed;
        f.backaction = std::span<const double>(force_buf.data(), n);
        f.gamma_opt = out.gamma_opt;
        f.omega_shifted = out.omega_shifted;
        const TimeSeries q = integrate_defect_mode(mode.with_n_th(sys.heating.n_th_effective), f, fs, n);
        std::copy(q.samples.begin(), q.samples.end(), q_buf.begin());
    }
    RealBuffer().swap(force_buf);
    fft::forward_real_inplace(q_buf, n);
    const Complex* qk = fft::as_complex(q_buf);

    // probe Δ(t): the same realization, regenerated
    RealBuffer d_buf(fft::inplace_size(n), 0.0);
    {
        const TimeSeries delta = synth_frequency_noise(s.ensemble, fs, n, s.seed);
        std::copy(delta.samples.begin(), delta.samples.end(), d_buf.begin());
    }
    fft::forward_real_inplace(d_buf, n);
    const Complex* dk = fft::as_complex(d_buf);

    // probe output field, built in place of v1
    {
        auto rng = substream(s.seed, Stream::upstream_vac);
        std::normal_distribution<double> normal;
        const double ua = std::sqrt(0.25 * nd * fs);
        const double se = std::sqrt(sys.eta), su = std::sqrt(1.0 - sys.eta);
        const double k1 = std::sqrt(sys.probe.kappa1());
        const double np = std::sqrt(sys.probe_photons);
        for (std::size_t k = 0; k < n; ++k) {
            const double w = fft::bin_omega(k, n, fs);
            const auto t = beam_transfer(w, sys.probe);
            const Complex field = pv1[k] - k1 * chi_cav(-w, sys.probe) * pw[k] + t.h_q * full_bin(qk, k, n) +
                                  t.h_delta * np * full_bin(dk, k, n);
            const double re = normal(rng);
            pv1[k] = se * field + su * ua * Complex(re, normal(rng));
        }
    }
    RealBuffer().swap(d_buf);
    ComplexBuffer().swap(pw);
    fft::inverse(pv1);
    for (auto& v : pv1) v /= nd;

    out.stream1 = detect(pv1, fs, s.chains[0].theta, s.chains[0].eta, s.seed, Stream::chain1_vac);
    out.stream2 = detect(pv1, fs, s.chains[1].theta, s.chains[1].eta, s.seed, Stream::chain2_vac);
    if (s.calibration_pair)
        out.calibration = std::make_pair(detect(pv1, fs, 0.0, s.chains[0].eta, s.seed, Stream::chain1_vac),
                                         detect(pv1, fs, 0.0, s.chains[1].eta, s.seed, Stream::chain2_vac));
    ComplexBuffer().swap(pv1);

    if (s.cooling_stream) {
        const double k1 = std::sqrt(sys.cooling.kappa1());
        for (std::size_t k = 0; k < n; ++k) {
            const double w = fft::bin_omega(k, n, fs);
            const auto t = beam_transfer(w, sys.cooling);
            Complex field = cv1[k] - k1 * chi_cav(-w, sys.cooling) * cw[k] + t.h_q * full_bin(qk, k, n);
            if (target > 0) {
                const Complex phase = std::polar(1.0, (w >= 0 ? 1.0 : -1.0) * s.tin_phase);
                field += -k1 * phase * full_bin(xt, k, n) / std::sqrt(2.0);
            }
            cv1[k] = field;
        }
        ComplexBuffer().swap(cw);
        fft::inverse(cv1);
        for (auto& v : cv1) v /= nd;
        out.cooling = detect(cv1, fs, s.cooling_theta, s.cooling_eta, s.seed, Stream::cooling_det_vac);
    }

    if (s.gain_ratio != 1.0 || s.delay != 0.0) {
        out.stream2 = apply_gain_delay(out.stream2, s.gain_ratio, s.delay);
        if (out.calibration) out.calibration->second = apply_gain_delay(out.calibration->second, s.gain_ratio, s.delay);
    }
    return out;
}

}  // namespace sideband
