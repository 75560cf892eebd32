#include "sideband/fitting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sideband/diagnostics.hpp"
#include "sideband/fft.hpp"

namespace sideband {

namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

struct Params {
    double c, g, a, b;
};

double model(const Params& p, double x) {
    const double h = 0.5 * p.g;
    const double d = x - p.c;
    return p.b + p.a / M_PI * h / (d * d + h * h);
}

// ∂f/∂(c, γ, A, b)
Vec4 gradient(const Params& p, double x) {
    const double h = 0.5 * p.g;
    const double d = x - p.c;
    const double q = d * d + h * h;
    Vec4 j;
    j(0) = p.a / M_PI * p.g * d / (q * q);
    j(1) = p.a / M_PI * 0.5 * (d * d - h * h) / (q * q);
    j(2) = h / (M_PI * q);
    j(3) = 1.0;
    return j;
}

bool masked(double w, const std::vector<Interval>& masks) {
    return std::any_of(masks.begin(), masks.end(), [&](const Interval& m) { return w >= m.first && w <= m.second; });
}

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

Params initial_guess(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    const std::size_t edge = std::max<std::size_t>(1, n / 10);
    std::vector<double> ends(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(edge));
    ends.insert(ends.end(), y.end() - static_cast<std::ptrdiff_t>(edge), y.end());
    const double b0 = median(ends);
    const auto ipk = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const double H = y[ipk] - b0;
    // contiguous region above H/10 around the peak, second moment about the peak bin
    std::size_t lo = ipk, hi = ipk;
    while (lo > 0 && y[lo - 1] - b0 > 0.1 * H) --lo;
    while (hi + 1 < n && y[hi + 1] - b0 > 0.1 * H) ++hi;
    double m0 = 0, m2 = 0;
    for (std::size_t i = lo; i <= hi; ++i) {
        const double w = y[i] - b0;
        const double d = x[i] - x[ipk];
        m0 += w;
        m2 += w * d * d;
    }
    const double dx = n > 1 ? (x.back() - x.front()) / static_cast<double>(n - 1) : 1.0;
    // a Lorentzian cut at a tenth of its height has second moment 1.40 (γ/2)²
    double g0 = m0 > 0 ? 2.0 * std::sqrt(m2 / m0 / 1.402) : dx;
    g0 = std::max(g0, dx);
    return {x[ipk], g0, H * M_PI * g0 / 2, b0};
}

struct LmOutcome {
    Params p;
    Mat4 normal;  // JᵀWJ at the solution
    double chi2;
    int iterations;
    bool converged;
};

LmOutcome levenberg_marquardt(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w, Params p, int max_iter, double tol) {
    auto chi2_of = [&](const Params& q) {
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - model(q, x[i]);
            s += w[i] * r * r;
        }
        return s;
    };
    double chi2 = chi2_of(p);
    double lambda = 1e-3;
    LmOutcome out{p, Mat4::Zero(), chi2, 0, false};
    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        const Vec4 scale(p.g, p.g, std::max(std::abs(p.a), 1e-300), std::abs(p.b) + std::abs(p.a) / p.g);
        Mat4 A = Mat4::Zero();
        Vec4 g = Vec4::Zero();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const Vec4 j = gradient(p, x[i]).cwiseProduct(scale);
            const double r = y[i] - model(p, x[i]);
            A.noalias() += w[i] * j * j.transpose();
            g += w[i] * r * j;
        }
        bool accepted = false;
        Vec4 step = Vec4::Zero();
        while (lambda < 1e16) {
            Mat4 Ad = A;
            for (int k = 0; k < 4; ++k) Ad(k, k) *= 1.0 + lambda;
            step = Ad.ldlt().solve(g);
            const Params q{p.c + step(0) * scale(0), p.g + step(1) * scale(1), p.a + step(2) * scale(2),
                           p.b + step(3) * scale(3)};
            if (q.g > 0 && std::isfinite(q.c)) {
                const double c2 = chi2_of(q);
                if (c2 <= chi2) {
                    p = q;
                    chi2 = c2;
                    lambda = std::max(lambda / 10, 1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10;
        }
        if (!accepted || step.cwiseAbs().maxCoeff() < tol) {
            out.converged = true;
            break;
        }
    }
    out.p = p;
    out.chi2 = chi2;
    Mat4 A = Mat4::Zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Vec4 j = gradient(p, x[i]);
        A.noalias() += w[i] * j * j.transpose();
    }
    out.normal = A;
    return out;
}

}  // namespace

double LorentzianFit::operator()(double omega) const {
    return model({center, fwhm, area, background}, omega);
}

LorentzianFit fit_lorentzian(const SpectrumGrid& psd, Interval window, const FitOptions& opt) {
    std::vector<double> x, y;
    auto [a, b] = psd.index_range(window.first, window.second);
    for (auto i = a; i < b; ++i)
        if (!masked(psd.omega(i), opt.mask)) {
            x.push_back(psd.omega(i));
            y.push_back(psd.values[i]);
        }
    if (x.empty()) throw InputError("fit_lorentzian: every bin in the window is masked");
    if (x.size() < 5) throw InputError("fit_lorentzian: fewer than 5 usable bins in the window");

    Params p = initial_guess(x, y);
    std::vector<double> w(x.size(), 1.0);
    LmOutcome res{};
    const int passes = opt.uniform_weights ? 1 : 3;
    int total_iter = 0;
    for (int pass = 0; pass < passes; ++pass) {
        if (!opt.uniform_weights)
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double m = std::max(std::abs(model(p, x[i])), 1e-300);
                w[i] = 1.0 / (m * m);
            }
        res = levenberg_marquardt(x, y, w, p, opt.max_iterations, opt.tolerance);
        total_iter += res.iterations;
        p = res.p;
    }

    LorentzianFit f;
    f.center = p.c;
    f.fwhm = p.g;
    f.area = p.a;
    f.background = p.b;
    f.mask = opt.mask;
    f.points = x.size();
    f.iterations = total_iter;
    f.converged = res.converged;
    f.area_nonpositive = !(p.a > 0);
    const double dof = static_cast<double>(x.size()) - 4.0;
    f.reduced_chi2 = res.chi2 / dof;
    double var_scale = f.reduced_chi2;
    if (opt.relative_sigma > 0 && !opt.uniform_weights) {
        var_scale = opt.relative_sigma * opt.relative_sigma;
        f.reduced_chi2 = res.chi2 / (var_scale * dof);
    }
    const Vec4 sc(p.g, p.g, std::max(std::abs(p.a), 1e-300), std::abs(p.b) + std::abs(p.a) / p.g);
    const Mat4 As = sc.asDiagonal() * res.normal * sc.asDiagonal();
    const Mat4 cov = sc.asDiagonal() * As.inverse() * sc.asDiagonal() * var_scale;
    for (int k = 0; k < 4; ++k) f.stderr_[static_cast<std::size_t>(k)] = std::sqrt(std::max(cov(k, k), 0.0));
    if (!f.converged) warn("fit_lorentzian: no convergence after " + std::to_string(total_iter) + " iterations");
    if (f.area_nonpositive) warn("fit_lorentzian: fitted area is not positive");
    return f;
}

namespace {

// s = N/D, N = h² + (Δ+ω)², D = h² + (Δ−ω)², h = κ/2
double s_model(double k, double d, double w) {
    const double h2 = 0.25 * k * k;
    return (h2 + (d + w) * (d + w)) / (h2 + (d - w) * (d - w));
}

Eigen::Vector2d s_grad(double k, double d, double w) {
    const double h = 0.5 * k;
    const double N = h * h + (d + w) * (d + w);
    const double D = h * h + (d - w) * (d - w);
    Eigen::Vector2d g;
    g(0) = (h * D - N * h) / (D * D);
    g(1) = (2 * (d + w) * D - 2 * (d - w) * N) / (D * D);
    return g;
}

}  // namespace

double CavityCalibration::s(double omega) const { return s_model(kappa, detuning, omega); }

double CavityCalibration::s_err(double omega) const {
    const auto g = s_grad(kappa, detuning, omega);
    Eigen::Matrix2d C;
    C << kappa_err * kappa_err, covariance_kd, covariance_kd, detuning_err * detuning_err;
    return std::sqrt(std::max(0.0, g.dot(C * g)));
}

CavityCalibration calibrate_cavity_asymmetry(const std::vector<AsymmetryPoint>& pts, const OpticalMode& guess) {
    if (pts.size() < 3) throw InputError("calibrate_cavity_asymmetry: need at least 3 modes");
    const bool weighted = std::all_of(pts.begin(), pts.end(), [](const AsymmetryPoint& p) { return p.sigma > 0; });
    std::vector<double> wts(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) wts[i] = weighted ? 1.0 / (pts[i].sigma * pts[i].sigma) : 1.0;

    std::vector<double> freqs;
    for (const auto& p : pts) freqs.push_back(p.omega);
    std::sort(freqs.begin(), freqs.end());
    const auto distinct = std::unique(freqs.begin(), freqs.end(), [&](double a, double b) {
                              return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), 1.0);
                          }) - freqs.begin();

    double k = guess.kappa(), d = guess.detuning();
    const double scale = guess.kappa();
    auto chi2_of = [&](double kk, double dd) {
        double s = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double r = pts[i].ratio - s_model(kk, dd, pts[i].omega);
            s += wts[i] * r * r;
        }
        return s;
    };
    double chi2 = chi2_of(k, d);
    double lambda = 1e-3;
    CavityCalibration c;
    for (int it = 0; it < 500; ++it) {
        Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Eigen::Vector2d j = s_grad(k, d, pts[i].omega) * scale;
            const double r = pts[i].ratio - s_model(k, d, pts[i].omega);
            A += wts[i] * j * j.transpose();
            g += wts[i] * r * j;
        }
        bool accepted = false;
        Eigen::Vector2d step = Eigen::Vector2d::Zero();
        while (lambda < 1e16) {
            Eigen::Matrix2d Ad = A;
            Ad(0, 0) *= 1 + lambda;
            Ad(1, 1) *= 1 + lambda;
            step = Ad.ldlt().solve(g);
            const double kn = std::abs(k + step(0) * scale), dn = d + step(1) * scale;
            const double c2 = chi2_of(kn, dn);
            if (kn > 0 && c2 <= chi2) {
                k = kn;
                d = dn;
                chi2 = c2;
                lambda = std::max(lambda / 10, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 10;
        }
        if (!accepted || step.cwiseAbs().maxCoeff() < 1e-12) {
            c.converged = true;
            break;
        }
    }
    c.kappa = k;
    c.detuning = d;
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Eigen::Vector2d j = s_grad(k, d, pts[i].omega) * scale;
        A += wts[i] * j * j.transpose();
        c.residuals.push_back(pts[i].ratio - s_model(k, d, pts[i].omega));
    }
    const double dof = static_cast<double>(pts.size()) - 2.0;
    c.reduced_chi2 = dof > 0 ? chi2 / dof : 0.0;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(A);
    const double cond = svd.singularValues()(0) / std::max(svd.singularValues()(1), 1e-300);
    c.ill_conditioned = distinct < 3 || cond > 1e14;
    if (c.ill_conditioned) {
        warn("calibrate_cavity_asymmetry: degenerate frequency set (ill-conditioned fit)");
        c.kappa_err = c.detuning_err = INFINITY;
        return c;
    }
    const double vs = weighted ? 1.0 : c.reduced_chi2;
    const Eigen::Matrix2d cov = A.inverse() * vs * scale * scale;
    c.kappa_err = std::sqrt(cov(0, 0));
    c.detuning_err = std::sqrt(cov(1, 1));
    c.covariance_kd = cov(0, 1);
    return c;
}

namespace {

double positive_floor(const SpectrumGrid& g) {
    std::vector<double> v;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.omega(i) > 0) v.push_back(g.values[i]);
    return median(v);
}

double wrap(double a) { return std::remainder(a, 2 * M_PI); }

}  // namespace

CalibrationResult detector_cross_calibration(const TimeSeries& s1, const TimeSeries& s2,
                                             const std::vector<Interval>& bands, const WelchOptions& opt) {
    if (bands.empty()) throw InputError("detector_cross_calibration: no tone bands given");
    const WelchPair wp = welch_pair(s1, s2, opt);
    const double f1 = positive_floor(wp.p11), f2 = positive_floor(wp.p22);
    const auto K = static_cast<double>(wp.segments);

    struct Bin {
        double w, coh, weight;
        cd h;
        double p11, p22;
        std::size_t band;
    };
    std::vector<Bin> bins;
    std::size_t good_bands = 0;
    double coh_sum = 0;
    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
        auto [a, b] = wp.p11.index_range(bands[bi].first, bands[bi].second);
        std::vector<Bin> local;
        double band_coh = 0;
        for (auto i = a; i < b; ++i) {
            if (!(wp.p11.omega(i) > 0)) continue;
            const cd c21 = std::conj(wp.p12.values[i]);
            const double coh = std::norm(c21) / (wp.p11.values[i] * wp.p22.values[i]);
            band_coh += coh;
            if (coh >= 0.5) {
                const double cc = std::min(coh, 1.0 - 1e-12);
                local.push_back({wp.p11.omega(i), coh, 2 * K * cc / (1 - cc), c21 / wp.p11.values[i],
                                 wp.p11.values[i], wp.p22.values[i], bi});
            }
        }
        if (b > a && band_coh / static_cast<double>(b - a) >= 0.5) {
            ++good_bands;
            for (auto& x : local) {
                coh_sum += x.coh;
                bins.push_back(x);
            }
        }
    }
    if (good_bands == 0 || bins.empty())
        throw IllConditioned("detector_cross_calibration: coherence below 0.5 in every tone band");

    CalibrationResult r;
    r.bins_used = bins.size();
    r.mean_coherence = coh_sum / static_cast<double>(bins.size());

    // gain from floor-subtracted powers, so independent shot noise does not bias it
    double num = 0, den = 0;
    for (const auto& x : bins) {
        num += x.p22 - f2;
        den += x.p11 - f1;
    }
    if (!(num > 0 && den > 0)) throw IllConditioned("detector_cross_calibration: tones do not rise above the floor");
    r.gain_ratio = std::sqrt(num / den);
    double sl = 0, sw = 0;
    for (const auto& x : bins) {
        const double gi = 0.5 * std::log((x.p22 - f2) / (x.p11 - f1));
        const double d = gi - std::log(r.gain_ratio);
        if (std::isfinite(d)) {
            sl += x.weight * d * d;
            sw += x.weight;
        }
    }
    r.gain_err = bins.size() > 1 && sw > 0 ? r.gain_ratio * std::sqrt(sl / sw / static_cast<double>(bins.size() - 1))
                                           : INFINITY;

    // unwrap along frequency: neighbouring tones are close enough that the phase step stays below π
    std::sort(bins.begin(), bins.end(), [](const Bin& a, const Bin& b) { return a.w < b.w; });
    double num_s = 0, den_s = 0, phi = std::arg(bins.front().h);
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (i > 0) phi += wrap(std::arg(bins[i].h) - std::arg(bins[i - 1].h));
        num_s += bins[i].weight * bins[i].w * (-phi);
        den_s += bins[i].weight * bins[i].w * bins[i].w;
    }
    double tau = num_s / den_s;
    for (int pass = 0; pass < 3; ++pass) {
        double n2 = 0, d2 = 0;
        for (const auto& x : bins) {
            const double res = wrap(std::arg(x.h) + x.w * tau);
            n2 += x.weight * x.w * res;
            d2 += x.weight * x.w * x.w;
        }
        tau -= n2 / d2;
    }
    double ssq = 0, sww = 0, d2 = 0;
    for (const auto& x : bins) {
        const double res = wrap(std::arg(x.h) + x.w * tau);
        ssq += x.weight * res * res;
        sww += x.weight;
        d2 += x.weight * x.w * x.w;
    }
    r.phase_delay = tau;
    r.delay_err = 1.0 / std::sqrt(d2);
    r.residual = std::sqrt(ssq / sww);
    return r;
}

TimeSeries apply_gain_delay(const TimeSeries& s, double gain, double tau) {
    s.validate();
    const std::size_t n = s.size();
    RealBuffer buf(fft::inplace_size(n));
    std::copy(s.samples.begin(), s.samples.end(), buf.begin());
    fft::forward_real_inplace(buf, n);
    cd* X = fft::as_complex(buf);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double w = 2 * M_PI * s.fs * static_cast<double>(k) / static_cast<double>(n);
        X[k] *= gain * std::polar(1.0, -w * tau) / static_cast<double>(n);
    }
    if (n % 2 == 0) X[n / 2] = X[n / 2].real();
    fft::inverse_real_inplace(buf, n);
    TimeSeries out{s.fs, RealBuffer(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n)), s.t0};
    return out;
}

TimeSeries apply_calibration(const TimeSeries& stream2, const CalibrationResult& cal) {
    if (!(cal.gain_ratio > 0)) throw std::invalid_argument("calibration gain must be > 0");
    return apply_gain_delay(stream2, 1.0 / cal.gain_ratio, -cal.phase_delay);
}

}  // namespace sideband
