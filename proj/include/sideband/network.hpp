#pragma once

#include <array>
#include <functional>

#include "sideband/cooling.hpp"
#include "sideband/system_model.hpp"

namespace sideband {

// Everything the output-field models need. Frequencies in rad/s.
struct OpticalSystem {
    MechanicalMode mode;
    OpticalMode cooling;
    OpticalMode probe;
    HeatingBudget heating;
    double probe_photons = 0;  // |ā_p|², sets the frequency-noise transduction
    std::function<double(double)> probe_frequency_noise;  // S_ΔΔ seen by the probe (symmetric), optional
    double probe_tin_psd = 0;  // S̄ of the probe's intracavity TIN amplitude quadrature
    double eta = 1.0;          // efficiency between cavity and the detection split
};

struct DetectionChain {
    double theta = 0;           // quadrature angle, rad
    double eta = 1;             // efficiency
    double lo_amplitude = 0;    // relative LO amplitude (0: direct detection)
    double bs_reflectivity = 0; // tap ratio r for single-port homodyne
    bool tin_cancelled = true;

    void validate() const;
};

// Independent noise inputs of the linear network.
enum Source : std::size_t {
    kThermal,
    kCoolVac1,
    kCoolVac2,
    kCoolTin,
    kProbeVac1,
    kProbeVac2,
    kProbeDelta,
    kProbeTin,
    kUpstreamVac,
    kChain1Vac,
    kChain2Vac,
    kCoolDetVac,
    kSourceCount
};

// y(ω) = Σ_j d_j ξ_j(ω) + m_j ξ_j(−ω)^*, with ξ_j circular and ⟨ξ_j(ω) ξ_j(ω)^*⟩ = S_j(ω).
// Real processes enter as (ξ(ω) + ξ(−ω)^*)/√2. Frequencies follow the exp(−iωt) transform
// of the complex output series, which is the labelling of the reconstructed field spectrum.
struct Response {
    std::array<cd, kSourceCount> d{};
    std::array<cd, kSourceCount> m{};

    Response& operator+=(const Response& o);
    Response& operator*=(cd c);
    void add_real(Source s, cd coeff);  // coeff · r(ω) for a real source r
};
Response operator*(cd c, Response r);

// Input-output coefficients of one beam at frequency ω (same transform convention).
struct BeamTransfer {
    cd t1;      // port-1 vacuum to output
    cd t2;      // lumped loss-port vacuum to output
    cd h_q;     // displacement Q to output field
    cd h_delta; // detuning excursion to output field (per unit |ā|)
    double kappa_loss;
};
BeamTransfer beam_transfer(double omega, const OpticalMode& beam);

class Network {
public:
    explicit Network(OpticalSystem system);

    const OpticalSystem& system() const { return sys_; }

    Response displacement(double omega) const;
    Response probe_field(double omega) const;
    Response cooling_field(double omega, double tin_phase = 0) const;

    Response chain(double omega, const DetectionChain& c, int index) const;
    Response cooling_detector(double omega, double eta, double theta = 0, double tin_phase = 0) const;

    static Response quadrature(const Response& at_w, const Response& at_minus_w, double theta);

    double source_psd(Source s, double omega) const;
    // ⟨a(ω) b(ω)^*⟩
    cd cross(const Response& a, const Response& b, double omega) const;
    double psd(const Response& a, double omega) const { return cross(a, a, omega).real(); }

private:
    OpticalSystem sys_;
    std::array<OpticalMode, 2> beams_;
};

}  // namespace sideband
