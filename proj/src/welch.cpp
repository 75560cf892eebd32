#include "sideband/welch.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sideband/diagnostics.hpp"
#include "sideband/fft.hpp"

namespace sideband {

std::vector<double> make_window(Window w, std::size_t n) {
    std::vector<double> v(n, 1.0);
    if (w == Window::hann)
        for (std::size_t i = 0; i < n; ++i)
            v[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n)));
    return v;
}

double welch_relative_sigma(Window w, std::size_t L, std::size_t step, std::size_t K) {
    if (K == 0) return INFINITY;
    const auto win = make_window(w, L);
    double s2 = 0;
    for (double x : win) s2 += x * x;
    double acc = 1.0;
    for (std::size_t j = 1; j < K && j * step < L; ++j) {
        double c = 0;
        for (std::size_t n = 0; n + j * step < L; ++n) c += win[n] * win[n + j * step];
        const double rho = (c / s2) * (c / s2);
        acc += 2.0 * (1.0 - static_cast<double>(j) / static_cast<double>(K)) * rho;
    }
    return std::sqrt(acc / static_cast<double>(K));
}

namespace {

struct Segmentation {
    std::size_t L, step, K;
};

Segmentation segment(std::size_t n, const WelchOptions& o) {
    if (o.segment_length < 2 || o.segment_length > n)
        throw std::invalid_argument("Welch: segment_length must lie in [2, n_samples]");
    if (!(o.overlap >= 0 && o.overlap < 1)) throw std::invalid_argument("Welch: overlap must lie in [0, 1)");
    const std::size_t L = o.segment_length;
    const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(L * (1.0 - o.overlap))));
    const std::size_t K = (n - L) / step + 1;
    if (K < 8) warn("Welch: only " + std::to_string(K) + " segments; variance of the estimate is large");
    return {L, step, K};
}

UniformAxis welch_axis(std::size_t L, double fs) {
    const double dw = 2.0 * M_PI * fs / static_cast<double>(L);
    return {-dw * static_cast<double>(L / 2), dw, L};
}

// Index into an unshifted DFT for output position i (ω ascending).
std::size_t shifted(std::size_t i, std::size_t L) { return (i + L - L / 2) % L; }

}  // namespace

WelchPair welch_pair(const TimeSeries& a, const TimeSeries& b, const WelchOptions& o) {
    a.validate();
    b.validate();
    if (a.size() != b.size() || a.fs != b.fs) throw std::invalid_argument("Welch: series must share fs and length");
    const auto [L, step, K] = segment(a.size(), o);
    const auto win = make_window(o.window, L);
    double s2 = 0;
    for (double x : win) s2 += x * x;

    std::vector<double> acc11(L, 0.0), acc22(L, 0.0);
    std::vector<cd> acc12(L, 0.0);
    ComplexBuffer A(L), B(L);
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t off = k * step;
        for (std::size_t n = 0; n < L; ++n) {
            A[n] = win[n] * a.samples[off + n];
            B[n] = win[n] * b.samples[off + n];
        }
        fft::forward(A);
        fft::forward(B);
        for (std::size_t j = 0; j < L; ++j) {
            acc11[j] += std::norm(A[j]);
            acc22[j] += std::norm(B[j]);
            acc12[j] += A[j] * std::conj(B[j]);
        }
    }
    const double norm = 1.0 / (a.fs * s2 * static_cast<double>(K));
    const auto axis = welch_axis(L, a.fs);
    WelchPair out{SpectrumGrid(axis, SpectrumUnits::per_hz), SpectrumGrid(axis, SpectrumUnits::per_hz),
                  CrossSpectrum{axis, std::vector<cd>(L)}, K, welch_relative_sigma(o.window, L, step, K)};
    for (std::size_t i = 0; i < L; ++i) {
        const std::size_t j = shifted(i, L);
        out.p11.values[i] = acc11[j] * norm;
        out.p22.values[i] = acc22[j] * norm;
        out.p12.values[i] = acc12[j] * norm;
    }
    return out;
}

WelchEstimate welch_psd(const TimeSeries& s, const WelchOptions& o) {
    s.validate();
    const auto [L, step, K] = segment(s.size(), o);
    const auto win = make_window(o.window, L);
    double s2 = 0;
    for (double x : win) s2 += x * x;
    std::vector<double> acc(L, 0.0);
    std::vector<double> seg(L);
    std::vector<cd> X(L / 2 + 1);
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t off = k * step;
        for (std::size_t n = 0; n < L; ++n) seg[n] = win[n] * s.samples[off + n];
        fft::forward_real(seg, X);
        for (std::size_t j = 0; j <= L / 2; ++j) {
            const double p = std::norm(X[j]);
            acc[j] += p;
            if (j != 0 && j != L - j) acc[L - j] += p;
        }
    }
    const double norm = 1.0 / (s.fs * s2 * static_cast<double>(K));
    WelchEstimate out{SpectrumGrid(welch_axis(L, s.fs), SpectrumUnits::per_hz), K,
                      welch_relative_sigma(o.window, L, step, K)};
    for (std::size_t i = 0; i < L; ++i) out.psd.values[i] = acc[shifted(i, L)] * norm;
    return out;
}

SpectrumGrid expected_welch(const std::function<double(double)>& psd, double fs, const WelchOptions& o,
                            std::size_t m) {
    const std::size_t L = o.segment_length;
    const std::size_t P = L * m;
    const auto win = make_window(o.window, L);
    double s2 = 0;
    for (double x : win) s2 += x * x;

    ComplexBuffer W(P, cd(0.0)), S(P);
    for (std::size_t n = 0; n < L; ++n) W[n] = win[n];
    fft::forward(W);
    for (auto& x : W) x = std::norm(x);
    for (std::size_t j = 0; j < P; ++j) S[j] = psd(fft::bin_omega(j, P, fs));
    fft::forward(W);
    fft::forward(S);
    for (std::size_t j = 0; j < P; ++j) S[j] *= W[j];
    fft::inverse(S);
    // circular convolution Σ_j S(ν_j) |W(f_k − ν_j)|², normalised by P for the inverse DFT
    const double norm = 1.0 / (static_cast<double>(P) * static_cast<double>(P) * s2);
    SpectrumGrid out(welch_axis(L, fs), SpectrumUnits::per_hz);
    for (std::size_t i = 0; i < L; ++i) out.values[i] = S[shifted(i, L) * m].real() * norm;
    return out;
}

}  // namespace sideband
