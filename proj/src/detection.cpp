#include "sideband/detection.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sideband/diagnostics.hpp"

namespace sideband {

SpectrumGrid probe_output_psd(const UniformAxis& axis, const OpticalSystem& sys) {
    const OpticalMode beams[] = {sys.cooling, sys.probe};
    const double gp = sys.probe.g();
    const double k1 = sys.probe.kappa1();
    return tabulate(axis, SpectrumUnits::quanta, [&](double w) {
        const cd chi_p = chi_mech_modified(w, sys.mode, beams);
        double sqq = displacement_psd_at(w, sys.mode, beams, sys.heating);
        sqq += 4 * gp * gp * sys.probe_tin_psd * std::norm(chi_p);
        const double cav = std::norm(chi_cav(-w, sys.probe));
        double signal = 2 * gp * gp * k1 * cav * (sqq + chi_p.imag());
        if (sys.probe_frequency_noise) signal += k1 * sys.probe_photons * cav * sys.probe_frequency_noise(w);
        return 0.5 + sys.eta * signal;
    });
}

SpectrumGrid probe_output_psd_network(const UniformAxis& axis, const OpticalSystem& sys) {
    const Network net(sys);
    return tabulate(axis, SpectrumUnits::quanta, [&](double w) { return net.psd(net.probe_field(w), w); });
}

SpectrumGrid cooling_output_psd(const UniformAxis& axis, const OpticalSystem& sys, double eta, double theta,
                                double tin_phase) {
    const Network net(sys);
    return tabulate(axis, SpectrumUnits::quanta,
                    [&](double w) { return net.psd(net.cooling_detector(w, eta, theta, tin_phase), w); });
}

SpectrumGrid cooling_tin_interference(const UniformAxis& axis, const OpticalSystem& sys, double tin_phase) {
    const Network net(sys);
    return tabulate(axis, SpectrumUnits::quanta, [&](double w) {
        const Response full = net.cooling_detector(w, 1.0, 0.0, tin_phase);
        // direct TIN term alone, projected the same way
        auto direct_field = [&](double x) {
            Response r;
            const cd phase = std::polar(1.0, (x >= 0 ? 1.0 : -1.0) * tin_phase);
            r.add_real(kCoolTin, -std::sqrt(sys.cooling.kappa1()) * phase / std::sqrt(2.0));
            return r;
        };
        const Response dir = Network::quadrature(direct_field(w), direct_field(-w), 0.0);
        const cd dm = full.d[kCoolTin] - dir.d[kCoolTin];
        const cd mm = full.m[kCoolTin] - dir.m[kCoolTin];
        const cd c = dir.d[kCoolTin] * std::conj(dm) * net.source_psd(kCoolTin, w) +
                     dir.m[kCoolTin] * std::conj(mm) * net.source_psd(kCoolTin, -w);
        return 2.0 * c.real();
    });
}

SpectrumGrid homodyne_psd(const UniformAxis& axis, const DetectionChain& chain, const OpticalSystem& sys,
                          int chain_index) {
    chain.validate();
    const Network net(sys);
    return tabulate(axis, SpectrumUnits::quanta,
                    [&](double w) { return net.psd(net.chain(w, chain, chain_index), w); });
}

CrossSpectrum homodyne_cross_psd(const UniformAxis& axis, const DetectionChain& c1, const DetectionChain& c2,
                                 const OpticalSystem& sys) {
    c1.validate();
    c2.validate();
    const Network net(sys);
    CrossSpectrum out{axis, std::vector<cd>(axis.size)};
    for (std::size_t i = 0; i < axis.size; ++i) {
        const double w = axis[i];
        out.values[i] = net.cross(net.chain(w, c1, 0), net.chain(w, c2, 1), w);
    }
    return out;
}

namespace {
bool same_axis(const UniformAxis& a, const UniformAxis& b) {
    return a.size == b.size && std::abs(a.start - b.start) <= 1e-9 * std::abs(a.step) &&
           std::abs(a.step - b.step) <= 1e-12 * std::abs(a.step);
}
}  // namespace

Reconstruction dual_homodyne_reconstruct(const SpectrumGrid& psd_1, const SpectrumGrid& psd_2,
                                         const CrossSpectrum& cross_12, const DetectionChain& c1,
                                         const DetectionChain& c2) {
    c1.validate();
    c2.validate();
    const double sdiff = std::sin(c2.theta - c1.theta);
    if (std::abs(sdiff) < 1e-3)
        throw IllConditioned("dual homodyne: |sin(theta1 - theta2)| = " + std::to_string(std::abs(sdiff)) +
                             " is below 1e-3");
    if (!(c1.eta > 0 && c2.eta > 0)) throw IllConditioned("dual homodyne: chain efficiencies must be > 0");
    if (!same_axis(psd_1.axis, psd_2.axis) || !same_axis(psd_1.axis, cross_12.axis) ||
        cross_12.values.size() != psd_1.size())
        throw std::invalid_argument("dual homodyne: spectra must share one frequency axis");

    Eigen::Matrix2d T;
    T << std::cos(c1.theta), std::sin(c1.theta), std::cos(c2.theta), std::sin(c2.theta);
    const Eigen::Matrix2d Ti = T.inverse();
    const double n1 = 0.5 * (1 - c1.eta), n2 = 0.5 * (1 - c2.eta);
    const double r12 = std::sqrt(c1.eta * c2.eta);

    Reconstruction rec;
    rec.conditioning = 1.0 / (sdiff * sdiff);
    rec.field = SpectrumGrid(psd_1.axis, SpectrumUnits::quanta);
    rec.s_xx = SpectrumGrid(psd_1.axis, SpectrumUnits::quanta);
    rec.s_yy = SpectrumGrid(psd_1.axis, SpectrumUnits::quanta);
    for (std::size_t i = 0; i < psd_1.size(); ++i) {
        Eigen::Matrix2cd Q;
        Q(0, 0) = (psd_1.values[i] - n1) / c1.eta;
        Q(1, 1) = (psd_2.values[i] - n2) / c2.eta;
        Q(0, 1) = cross_12.values[i] / r12;
        Q(1, 0) = std::conj(Q(0, 1));
        const Eigen::Matrix2cd S = Ti.cast<cd>() * Q * Ti.transpose().cast<cd>();
        rec.s_xx.values[i] = S(0, 0).real();
        rec.s_yy.values[i] = S(1, 1).real();
        rec.field.values[i] = 0.5 * (S(0, 0).real() + S(1, 1).real()) + S(0, 1).imag();
    }
    return rec;
}

double asymmetry_factor(double omega_m_shifted, const OpticalMode& probe) {
    return std::norm(chi_cav(-omega_m_shifted, probe)) / std::norm(chi_cav(omega_m_shifted, probe));
}

namespace {

bool masked(double w, const std::vector<Interval>& masks) {
    return std::any_of(masks.begin(), masks.end(), [&](const Interval& m) { return w >= m.first && w <= m.second; });
}

double median_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("sideband_ratio: no unmasked bins in the quiet bands");
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace

SidebandPair sideband_ratio(const SpectrumGrid& psd, double wp, double hw, const SidebandOptions& opt) {
    if (!(wp > 0) || !(hw > 0) || hw >= wp) throw std::invalid_argument("sideband_ratio: need 0 < half_window < Omega'");
    const double qb = opt.quiet_band > 0 ? opt.quiet_band : hw;
    const double dw = psd.axis.step;

    auto floor_near = [&](double c) {
        if (opt.floor) return *opt.floor;
        std::vector<double> v;
        for (auto [lo, hi] : {Interval{c - hw - qb, c - hw}, Interval{c + hw, c + hw + qb}}) {
            auto [a, b] = psd.index_range(lo, hi);
            for (auto i = a; i < b; ++i)
                if (!masked(psd.omega(i), opt.masks)) v.push_back(psd.values[i]);
        }
        return median_of(std::move(v));
    };
    auto area = [&](double c, double floor) {
        auto [a, b] = psd.index_range(c - hw, c + hw);
        if (a == b) throw std::invalid_argument("sideband_ratio: window lies outside the spectrum");
        double s = 0.0;
        std::size_t used = 0;
        const double w0 = opt.weight ? opt.weight(c) : 1.0;
        for (auto i = a; i < b; ++i) {
            if (masked(psd.omega(i), opt.masks)) continue;
            s += (psd.values[i] - floor) * (opt.weight ? w0 / opt.weight(psd.omega(i)) : 1.0);
            ++used;
        }
        if (used == 0) throw std::invalid_argument("sideband_ratio: window is fully masked");
        return s * dw / (2 * M_PI);
    };

    SidebandPair p;
    p.omega_m_shifted = wp;
    const double fp = floor_near(wp), fn = floor_near(-wp);
    p.floor = 0.5 * (fp + fn);
    p.area_pos = area(wp, fp);
    p.area_neg = area(-wp, fn);
    p.negative_area = !(p.area_pos > 0 && p.area_neg > 0);
    if (p.negative_area) warn("sideband_ratio: non-positive sideband area; background likely misestimated");
    p.ratio = p.area_pos / p.area_neg;
    return p;
}

OccupancyEstimate occupancy_from_asymmetry(double R, double s) {
    if (!(R > 0) || !(s > 0)) throw std::invalid_argument("occupancy_from_asymmetry: R and s must be > 0");
    OccupancyEstimate e;
    e.ratio_over_s = R / s;
    const double x = e.ratio_over_s - 1.0;
    if (std::abs(x) <= 4 * std::numeric_limits<double>::epsilon()) {
        e.infinite = true;
        e.n = e.n_alternate = std::numeric_limits<double>::infinity();
        return e;
    }
    e.n = 1.0 / x;
    e.n_alternate = -1.0 / x;
    e.orientation_mismatch = x < 0;
    return e;
}

}  // namespace sideband
