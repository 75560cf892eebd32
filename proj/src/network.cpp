#include "sideband/network.hpp"

#include <cmath>
#include <stdexcept>

namespace sideband {

void DetectionChain::validate() const {
    if (!(eta >= 0 && eta <= 1)) throw std::invalid_argument("DetectionChain.eta must lie in [0, 1]");
    if (!(bs_reflectivity >= 0 && bs_reflectivity < 0.5))
        throw std::invalid_argument("DetectionChain.bs_reflectivity must lie in [0, 0.5)");
    if (!std::isfinite(theta)) throw std::invalid_argument("DetectionChain.theta must be finite");
    if (!(lo_amplitude >= 0)) throw std::invalid_argument("DetectionChain.lo_amplitude must be >= 0");
}

Response& Response::operator+=(const Response& o) {
    for (std::size_t j = 0; j < kSourceCount; ++j) {
        d[j] += o.d[j];
        m[j] += o.m[j];
    }
    return *this;
}

Response& Response::operator*=(cd c) {
    for (std::size_t j = 0; j < kSourceCount; ++j) {
        d[j] *= c;
        m[j] *= c;
    }
    return *this;
}

void Response::add_real(Source s, cd coeff) {
    d[s] += coeff / std::sqrt(2.0);
    m[s] += coeff / std::sqrt(2.0);
}

Response operator*(cd c, Response r) {
    r *= c;
    return r;
}

BeamTransfer beam_transfer(double omega, const OpticalMode& beam) {
    const double k1 = beam.kappa1();
    const double kl = beam.kappa() - k1;
    const cd c = chi_cav(-omega, beam);
    const cd i(0, 1);
    BeamTransfer t;
    t.t1 = 1.0 - k1 * c;
    t.t2 = -std::sqrt(k1 * std::max(kl, 0.0)) * c;
    t.h_q = i * std::sqrt(2.0) * beam.g() * std::sqrt(k1) * c;
    t.h_delta = -i * std::sqrt(k1) * c;
    t.kappa_loss = std::max(kl, 0.0);
    return t;
}

Network::Network(OpticalSystem system) : sys_(std::move(system)), beams_{sys_.cooling, sys_.probe} {
    sys_.heating.validate();
    if (!(sys_.eta >= 0 && sys_.eta <= 1)) throw std::invalid_argument("OpticalSystem.eta must lie in [0, 1]");
}

namespace {

// Backaction force of one beam's vacuum inputs: −√2 g (δa(ω) + δa(−ω)^*), δa(ω) = χ(−ω) Σ √κ_p a_p(ω).
void add_vacuum_force(Response& r, double omega, const OpticalMode& beam, Source port1, Source port2) {
    const double g = beam.g();
    const double k1 = beam.kappa1();
    const double kl = std::max(beam.kappa() - k1, 0.0);
    const cd direct = -std::sqrt(2.0) * g * chi_cav(-omega, beam);
    const cd mirror = -std::sqrt(2.0) * g * std::conj(chi_cav(omega, beam));
    r.d[port1] += direct * std::sqrt(k1);
    r.m[port1] += mirror * std::sqrt(k1);
    r.d[port2] += direct * std::sqrt(kl);
    r.m[port2] += mirror * std::sqrt(kl);
}

}  // namespace

Response Network::displacement(double omega) const {
    Response f;
    f.add_real(kThermal, 1.0);
    add_vacuum_force(f, omega, sys_.cooling, kCoolVac1, kCoolVac2);
    add_vacuum_force(f, omega, sys_.probe, kProbeVac1, kProbeVac2);
    f.add_real(kCoolTin, -2.0 * sys_.cooling.g());
    f.add_real(kProbeTin, -2.0 * sys_.probe.g());
    // exp(−iωt) convention: χ'(ω) → χ'(−ω)
    return chi_mech_modified(-omega, sys_.mode, beams_) * f;
}

Response Network::probe_field(double omega) const {
    const auto t = beam_transfer(omega, sys_.probe);
    Response r = t.h_q * displacement(omega);
    r.d[kProbeVac1] += t.t1;
    r.d[kProbeVac2] += t.t2;
    r.add_real(kProbeDelta, t.h_delta * std::sqrt(sys_.probe_photons));
    r *= std::sqrt(sys_.eta);
    r.d[kUpstreamVac] += std::sqrt(1.0 - sys_.eta);
    return r;
}

Response Network::cooling_field(double omega, double tin_phase) const {
    const auto t = beam_transfer(omega, sys_.cooling);
    Response r = t.h_q * displacement(omega);
    r.d[kCoolVac1] += t.t1;
    r.d[kCoolVac2] += t.t2;
    // TIN rides on the amplitude quadrature: δa_out ⊃ −√κ₁ X_TIN / √2
    const double sgn = omega >= 0 ? 1.0 : -1.0;
    const cd phase = std::polar(1.0, sgn * tin_phase);
    r.add_real(kCoolTin, -std::sqrt(sys_.cooling.kappa1()) * phase / std::sqrt(2.0));
    return r;
}

Response Network::quadrature(const Response& a, const Response& b, double theta) {
    const cd em = std::polar(1.0, -theta) / std::sqrt(2.0);
    const cd ep = std::polar(1.0, theta) / std::sqrt(2.0);
    Response x;
    for (std::size_t j = 0; j < kSourceCount; ++j) {
        x.d[j] = em * a.d[j] + ep * std::conj(b.m[j]);
        x.m[j] = em * a.m[j] + ep * std::conj(b.d[j]);
    }
    return x;
}

Response Network::chain(double omega, const DetectionChain& c, int index) const {
    if (index != 0 && index != 1) throw std::invalid_argument("chain index must be 0 or 1");
    Response x = quadrature(probe_field(omega), probe_field(-omega), c.theta);
    x *= std::sqrt(c.eta);
    if (!c.tin_cancelled)
        x.add_real(kProbeTin, std::sqrt(c.eta * sys_.eta) * std::cos(c.theta) * -std::sqrt(sys_.probe.kappa1()));
    x.add_real(index == 0 ? kChain1Vac : kChain2Vac, std::sqrt(1.0 - c.eta));
    return x;
}

Response Network::cooling_detector(double omega, double eta, double theta, double tin_phase) const {
    if (!(eta >= 0 && eta <= 1)) throw std::invalid_argument("cooling detector eta must lie in [0, 1]");
    Response x = quadrature(cooling_field(omega, tin_phase), cooling_field(-omega, tin_phase), theta);
    x *= std::sqrt(eta);
    x.add_real(kCoolDetVac, std::sqrt(1.0 - eta));
    return x;
}

double Network::source_psd(Source s, double omega) const {
    switch (s) {
    case kThermal: return 2.0 * sys_.mode.gamma() * (sys_.heating.n_th_effective + 0.5);
    case kCoolTin: return sys_.heating.tin_force_psd;
    case kProbeDelta: return sys_.probe_frequency_noise ? sys_.probe_frequency_noise(omega) : 0.0;
    case kProbeTin: return sys_.probe_tin_psd;
    default: return 0.5;
    }
}

cd Network::cross(const Response& a, const Response& b, double omega) const {
    cd acc = 0.0;
    for (std::size_t j = 0; j < kSourceCount; ++j) {
        const auto s = static_cast<Source>(j);
        if (a.d[j] != 0.0 || b.d[j] != 0.0) acc += a.d[j] * std::conj(b.d[j]) * source_psd(s, omega);
        if (a.m[j] != 0.0 || b.m[j] != 0.0) acc += a.m[j] * std::conj(b.m[j]) * source_psd(s, -omega);
    }
    return acc;
}

}  // namespace sideband
