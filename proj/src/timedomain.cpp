#include "sideband/timedomain.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <stdexcept>
#include <string>

#include "sideband/diagnostics.hpp"
#include "sideband/fft.hpp"
#include "sideband/tin.hpp"
#include "sideband/units.hpp"

namespace sideband {

std::mt19937_64 substream(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

DampedOscillator DampedOscillator::thermal(const MechanicalMode& m) {
    return {m.omega_m(), m.gamma(), m.omega_m(), 2.0 * m.gamma() * (m.n_th() + 0.5)};
}

Eigen::Matrix2d DampedOscillator::propagator(double h) const {
    const double wd2 = omega0 * omega0 - 0.25 * gamma * gamma;
    Eigen::Matrix2d phi;
    if (wd2 > 0) {
        const double wd = std::sqrt(wd2);
        const double c = std::cos(wd * h), s = std::sin(wd * h), e = std::exp(-0.5 * gamma * h);
        const double r = 0.5 * gamma / wd, q = omega0 / wd;
        phi << c + r * s, q * s, -q * s, c - r * s;
        return e * phi;
    }
    Eigen::Matrix2d A;
    A << 0, omega0, -omega0, -gamma;
    return (A * h).exp();
}

Eigen::Matrix2d DampedOscillator::stationary_covariance() const {
    const double v = b * b * intensity / (2.0 * gamma * omega0 * omega0);
    return Eigen::Vector2d(v, v).asDiagonal();
}

double DampedOscillator::continuous_psd(double w) const {
    const double d = omega0 * omega0 - w * w;
    return b * b * intensity / (d * d + gamma * gamma * w * w);
}

namespace {

// Coefficients of the sampled PSD h[2 Re(Σ11(1 − zΦ22)/(1 − z tr Φ + z² det Φ)) − Σ11], z = e^{iωh}.
struct SampledForm {
    double s11, phi22, tr, det, h;

    SampledForm(const DampedOscillator& o, double fs) : h(1.0 / fs) {
        const auto phi = o.propagator(h);
        s11 = o.stationary_covariance()(0, 0);
        phi22 = phi(1, 1);
        tr = phi.trace();
        det = phi.determinant();
    }

    double at(cd z) const {
        const cd num = s11 * (1.0 - z * phi22);
        const cd den = 1.0 - z * tr + z * z * det;
        const double re = (num * std::conj(den)).real() / std::norm(den);
        return h * (2.0 * re - s11);
    }
};

}  // namespace

double DampedOscillator::sampled_psd(double w, double fs) const {
    return SampledForm(*this, fs).at(std::polar(1.0, w / fs));
}

void NoiseEnsemble::validate() const {
    for (std::size_t i = 0; i < modes.size(); ++i)
        if (!std::isfinite(modes[i].coupling))
            throw std::invalid_argument("NoiseEnsemble.modes[" + std::to_string(i) + "].coupling must be finite");
}

double NoiseEnsemble::highest_frequency() const {
    double w = 0;
    for (const auto& m : modes) w = std::max(w, m.mode.omega_m());
    return w;
}

double NoiseEnsemble::psd(double w) const {
    double s = 0;
    for (const auto& m : modes) s += m.coupling * m.coupling * DampedOscillator::thermal(m.mode).continuous_psd(w);
    return s;
}

double NoiseEnsemble::sampled_psd(double w, double fs) const {
    double s = 0;
    for (const auto& m : modes) s += m.coupling * m.coupling * DampedOscillator::thermal(m.mode).sampled_psd(w, fs);
    return s;
}

NoiseEnsemble default_ensemble(const EnsembleOptions& o) {
    if (o.count == 0) return {{}, o.seed};
    if (!(o.omega_hi > o.omega_lo && o.gap_hi >= o.gap_lo && o.linewidth > 0))
        throw std::invalid_argument("EnsembleOptions: need omega_hi > omega_lo, gap_hi >= gap_lo, linewidth > 0");
    const double gap = std::max(0.0, std::min(o.gap_hi, o.omega_hi) - std::max(o.gap_lo, o.omega_lo));
    const double span = o.omega_hi - o.omega_lo - gap;
    NoiseEnsemble e;
    e.seed = o.seed;
    const double per_mode = o.rms_detuning * o.rms_detuning / static_cast<double>(o.count);
    for (std::size_t j = 0; j < o.count; ++j) {
        double w = o.omega_lo + (static_cast<double>(j) + 0.5) * span / static_cast<double>(o.count);
        if (w >= o.gap_lo) w += gap;
        const double n = thermal_occupancy(o.temperature, w);
        e.modes.push_back({MechanicalMode(w, o.linewidth, n), std::sqrt(per_mode / (n + 0.5))});
    }
    return e;
}

TimeSeries synth_frequency_noise(const NoiseEnsemble& ensemble, double fs, std::size_t n, std::uint64_t seed) {
    ensemble.validate();
    if (!(fs > 0)) throw std::invalid_argument("fs must be > 0");
    if (n == 0) throw std::invalid_argument("n_samples must be > 0");
    TimeSeries out{fs, RealBuffer(n, 0.0), 0.0};
    if (ensemble.modes.empty()) return out;
    if (!(2.0 * M_PI * fs > 2.0 * ensemble.highest_frequency()))
        throw InputError("synth_frequency_noise: fs = " + std::to_string(fs) + " Hz aliases the highest mode at " +
                         std::to_string(rad_to_hz(ensemble.highest_frequency())) + " Hz");

    std::vector<SampledForm> forms;
    std::vector<double> c2;
    for (const auto& m : ensemble.modes) {
        forms.emplace_back(DampedOscillator::thermal(m.mode), fs);
        c2.push_back(m.coupling * m.coupling);
    }
    auto rng = substream(seed, Stream::frequency_noise);
    std::normal_distribution<double> normal;
    RealBuffer buf(fft::inplace_size(n), 0.0);
    cd* X = fft::as_complex(buf);
    const double nfs = static_cast<double>(n) * fs;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const cd z = std::polar(1.0, 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n));
        double s = 0;
        for (std::size_t j = 0; j < forms.size(); ++j) s += c2[j] * forms[j].at(z);
        s = std::max(s, 0.0);
        if (k == 0 || 2 * k == n) {
            X[k] = std::sqrt(nfs * s) * normal(rng);
        } else {
            const double a = std::sqrt(0.5 * nfs * s);
            const double re = normal(rng);
            X[k] = a * cd(re, normal(rng));
        }
    }
    fft::inverse_real_inplace(buf, n);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = buf[i] * inv;
    return out;
}

Transduction transduce_fast_cavity(const TimeSeries& delta, const OpticalMode& mode, int order,
                                   const TransduceOptions& o) {
    delta.validate();
    if (order < 1 || order > 3) throw std::invalid_argument("transduce_fast_cavity: order must be 1, 2 or 3");
    const double c1 = o.include_linear ? tin_first_order_coeff(mode) : 0.0;
    const double c2 = order >= 2 ? tin_second_order_coeff(mode) : 0.0;
    const double c3 = order >= 3 ? tin_cubic_coeff(mode) : 0.0;
    Transduction t{{delta.fs, RealBuffer(delta.size()), delta.t0}, 0.0};
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double d = delta.samples[i];
        t.intensity.samples[i] = d * (c1 + d * (c2 + d * c3));
    }
    const double band = o.band_limit > 0 ? o.band_limit : M_PI * delta.fs;
    t.fast_cavity_ratio = mode.kappa() / band;
    return t;
}

DampedOscillator effective_oscillator(const MechanicalMode& mode, double gamma_opt, double omega_shifted) {
    const double w = omega_shifted > 0 ? omega_shifted : mode.omega_m();
    return {w, mode.gamma() + gamma_opt, mode.omega_m(), 2.0 * mode.gamma() * (mode.n_th() + 0.5)};
}

TimeSeries integrate_defect_mode(const MechanicalMode& mode, const DefectForces& f, double fs, std::size_t n) {
    if (!(fs > 0)) throw std::invalid_argument("fs must be > 0");
    if (fs < 20.0 * rad_to_hz(mode.omega_m()))
        throw std::invalid_argument("integrate_defect_mode: fs must be at least 20 x the mode frequency");
    if (!f.backaction.empty() && f.backaction.size() != n)
        throw std::invalid_argument("integrate_defect_mode: backaction series length differs from n_samples");
    if (!f.tin.empty() && f.tin.size() != n)
        throw std::invalid_argument("integrate_defect_mode: TIN series length differs from n_samples");
    const DampedOscillator osc = effective_oscillator(mode, f.gamma_opt, f.omega_shifted);
    if (!(osc.gamma > 0))
        throw Divergence("integrate_defect_mode: total damping " + std::to_string(osc.gamma) +
                         " rad/s is not positive (anti-damped)");
    const double h = 1.0 / fs;
    if (static_cast<double>(n) * osc.gamma / fs < 10.0)
        warn("integrate_defect_mode: record spans fewer than 10 damping times");

    // Van Loan blocks: exp([[A, B, 0], [0, 0, 1/h], [0, 0, 0]] h) = [[Φ, G0, G1], ...]
    Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
    M(0, 1) = osc.omega0;
    M(1, 0) = -osc.omega0;
    M(1, 1) = -osc.gamma;
    M(1, 2) = osc.b / osc.omega0;
    M(2, 3) = 1.0 / h;
    const Eigen::Matrix4d E = (M * h).exp();
    const Eigen::Matrix2d phi = osc.propagator(h);
    const Eigen::Vector2d g0 = E.block<2, 1>(0, 2);
    const Eigen::Vector2d g1 = E.block<2, 1>(0, 3);

    // Discrete thermal covariance ∫₀ʰ e^{As} B D Bᵀ e^{Aᵀs} ds
    Eigen::Matrix4d C = Eigen::Matrix4d::Zero();
    C.block<2, 2>(0, 0) = -M.block<2, 2>(0, 0);
    C(1, 3) = osc.intensity * (osc.b / osc.omega0) * (osc.b / osc.omega0);
    C.block<2, 2>(2, 2) = M.block<2, 2>(0, 0).transpose();
    const Eigen::Matrix4d F = (C * h).exp();
    Eigen::Matrix2d qd = F.block<2, 2>(2, 2).transpose() * F.block<2, 2>(0, 2);
    qd = 0.5 * (qd + qd.transpose());
    const double l11 = std::sqrt(std::max(qd(0, 0), 0.0));
    const double l21 = l11 > 0 ? qd(1, 0) / l11 : 0.0;
    const double l22 = std::sqrt(std::max(qd(1, 1) - l21 * l21, 0.0));

    auto rng = substream(f.thermal_seed, Stream::thermal);
    std::normal_distribution<double> normal;
    Eigen::Vector2d y = f.initial;
    if (f.stationary_start) {
        const double sd = std::sqrt(osc.stationary_covariance()(0, 0));
        y(0) = sd * normal(rng);
        y(1) = sd * normal(rng);
    }
    auto force = [&](std::size_t i) {
        double v = 0;
        if (!f.backaction.empty()) v += f.backaction[i];
        if (!f.tin.empty()) v += f.tin[i];
        return v;
    };
    TimeSeries q{fs, RealBuffer(n), 0.0};
    double fn = n > 0 ? force(0) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        q.samples[i] = y(0);
        if (i + 1 == n) break;
        const double fn1 = force(i + 1);
        y = phi * y + g0 * fn + g1 * (fn1 - fn);
        if (f.thermal) {
            const double z1 = normal(rng), z2 = normal(rng);
            y(0) += l11 * z1;
            y(1) += l21 * z1 + l22 * z2;
        }
        fn = fn1;
    }
    if (!std::isfinite(y(0)) || !std::isfinite(y(1))) throw Divergence("integrate_defect_mode: state became non-finite");
    return q;
}

}  // namespace sideband
