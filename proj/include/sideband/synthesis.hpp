#pragma once

#include <array>
#include <optional>
#include <utility>

#include "sideband/network.hpp"
#include "sideband/series.hpp"
#include "sideband/timedomain.hpp"
#include "sideband/welch.hpp"

namespace sideband {

struct SynthesisSetup {
    OpticalSystem system;  // probe_frequency_noise is ignored; the ensemble supplies Δ(t)
    NoiseEnsemble ensemble;
    std::array<DetectionChain, 2> chains;
    double fs = 31.25e6;
    std::size_t n_samples = std::size_t{1} << 24;
    std::uint64_t seed = 0;

    // TIN force: the cooling beam's nonlinear transduction of Δ(t), scaled so its mean PSD
    // over [tin_band_lo, tin_band_hi] equals system.heating.tin_force_psd. An empty band
    // (hi <= lo) means Ω′ ± 4(Γ + Γ_opt).
    int tin_order = 3;
    double tin_band_lo = 0;
    double tin_band_hi = 0;

    double gain_ratio = 1.0;  // injected on stream 2
    double delay = 0.0;       // s, stream 2 lags

    bool cooling_stream = false;
    double cooling_eta = 1.0;
    double cooling_theta = 0.0;
    double tin_phase = 0.0;

    bool calibration_pair = false;  // also emit both chains at θ = 0 from the same field

    void validate() const;
};

struct SynthesisOutput {
    TimeSeries stream1, stream2;
    std::optional<TimeSeries> cooling;
    std::optional<std::pair<TimeSeries, TimeSeries>> calibration;
    double omega_shifted = 0;
    double gamma_opt = 0;           // cooling + probe
    double fast_cavity_ratio = 0;
    double tin_scale = 0;           // factor applied to the raw transduced series
    double tin_level_at_peak = 0;   // realized TIN PSD within ±2(Γ+Γ_opt) of Ω′, relative to the target
};

SynthesisOutput synth_photocurrents(const SynthesisSetup& setup);

// The system the synthesis realizes, with the ensemble's sampled S_ΔΔ as probe frequency noise.
OpticalSystem analytic_system(const SynthesisSetup& setup);

// Expected Welch estimate of one detector stream, including any gain applied to it.
SpectrumGrid expected_chain_psd(const OpticalSystem& system, const DetectionChain& chain, int index, double gain,
                                double fs, const WelchOptions& options = {});

}  // namespace sideband
