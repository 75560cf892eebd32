#pragma once

#include <functional>

#include "sideband/detection.hpp"
#include "sideband/series.hpp"
#include "sideband/spectrum.hpp"

namespace sideband {

enum class Window { hann, rectangular };

struct WelchOptions {
    std::size_t segment_length = 65536;
    double overlap = 0.5;
    Window window = Window::hann;
};

// Two-sided estimates on the axis ω_k = 2π fs (k − L/2)/L, k = 0..L−1, per Hz
// (so a white series of variance σ² integrates to σ² over dω/2π).
struct WelchPair {
    SpectrumGrid p11, p22;
    CrossSpectrum p12;  // ⟨X1 X2^*⟩
    std::size_t segments = 0;
    double relative_sigma = 0;  // σ/mean of each auto-PSD bin away from DC and Nyquist
};

struct WelchEstimate {
    SpectrumGrid psd;
    std::size_t segments = 0;
    double relative_sigma = 0;
};

WelchEstimate welch_psd(const TimeSeries& series, const WelchOptions& options = {});
WelchPair welch_pair(const TimeSeries& a, const TimeSeries& b, const WelchOptions& options = {});

std::vector<double> make_window(Window w, std::size_t n);

// σ/mean of a Welch bin for K segments: sqrt((1 + 2 Σ_j (1 − j/K) ρ_j)/K), ρ_j the window overlap correlation.
double welch_relative_sigma(Window w, std::size_t segment_length, std::size_t step, std::size_t segments);

// Expected Welch output for a stationary discrete-time series with two-sided PSD `psd` (per Hz, ω in rad/s,
// evaluated on (−π fs, π fs]): the PSD convolved with the window's spectral kernel.
SpectrumGrid expected_welch(const std::function<double(double)>& psd, double fs, const WelchOptions& options = {},
                            std::size_t oversample = 8);

}  // namespace sideband
