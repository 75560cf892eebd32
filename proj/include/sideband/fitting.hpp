#pragma once

#include <array>
#include <string>
#include <vector>

#include "sideband/detection.hpp"
#include "sideband/series.hpp"
#include "sideband/spectrum.hpp"
#include "sideband/welch.hpp"

namespace sideband {

// S(ω) = background + (area/π) (γ/2) / ((ω − center)² + (γ/2)²); area is ∫(S − background) dω.
struct LorentzianFit {
    double center = 0;
    double fwhm = 0;
    double area = 0;
    double background = 0;
    std::array<double, 4> stderr_{};  // center, fwhm, area, background
    std::vector<Interval> mask;
    bool converged = false;
    bool area_nonpositive = false;
    int iterations = 0;
    std::size_t points = 0;
    double reduced_chi2 = 0;

    double center_err() const { return stderr_[0]; }
    double fwhm_err() const { return stderr_[1]; }
    double area_err() const { return stderr_[2]; }
    double background_err() const { return stderr_[3]; }
    double operator()(double omega) const;
};

struct FitOptions {
    std::vector<Interval> mask;
    // σ_i = relative_sigma × model_i when > 0 (e.g. from the Welch segment count); otherwise the
    // same inverse-variance shape is used and the scale is taken from the residuals.
    double relative_sigma = 0;
    bool uniform_weights = false;
    int max_iterations = 200;
    double tolerance = 1e-10;
};

LorentzianFit fit_lorentzian(const SpectrumGrid& psd, Interval window, const FitOptions& options = {});

struct AsymmetryPoint {
    double omega = 0;  // rad/s
    double ratio = 0;
    double sigma = 0;  // standard error of ratio; 0 = unknown
};

struct CavityCalibration {
    double kappa = 0;
    double detuning = 0;
    double kappa_err = 0;
    double detuning_err = 0;
    double covariance_kd = 0;
    std::vector<double> residuals;  // ratio − s(ω), input order
    double reduced_chi2 = 0;
    bool ill_conditioned = false;
    bool converged = false;

    double s(double omega) const;
    double s_err(double omega) const;
};

CavityCalibration calibrate_cavity_asymmetry(const std::vector<AsymmetryPoint>& pairs, const OpticalMode& probe_guess);

struct CalibrationResult {
    double gain_ratio = 1;   // |stream2 / stream1|
    double phase_delay = 0;  // s, stream2 lags stream1
    double residual = 0;     // weighted RMS phase residual of H against e^{−iωτ}, rad
    double gain_err = 0;
    double delay_err = 0;
    std::size_t bins_used = 0;
    double mean_coherence = 0;
};

CalibrationResult detector_cross_calibration(const TimeSeries& stream1, const TimeSeries& stream2,
                                             const std::vector<Interval>& tone_bands,
                                             const WelchOptions& options = {});

// Inverse of the fitted gain and delay applied to stream2 (frequency domain, circular).
TimeSeries apply_calibration(const TimeSeries& stream2, const CalibrationResult& cal);
// gain · delay by tau seconds, circular.
TimeSeries apply_gain_delay(const TimeSeries& s, double gain, double tau);

}  // namespace sideband
