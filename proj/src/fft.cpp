#include "sideband/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace sideband::fft {

namespace {

std::mutex planner_mutex;

class Plan {
public:
    explicit Plan(fftw_plan p) : p_(p) {
        if (!p_) throw std::runtime_error("FFTW failed to create a plan");
    }
    ~Plan() {
        std::lock_guard lock(planner_mutex);
        fftw_destroy_plan(p_);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    void execute() const { fftw_execute(p_); }

private:
    fftw_plan p_;
};

fftw_complex* fc(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

int as_int(std::size_t n) {
    if (n > static_cast<std::size_t>(std::numeric_limits<int>::max())) throw std::length_error("FFT too long");
    return static_cast<int>(n);
}

void complex_transform(std::span<std::complex<double>> data, int sign) {
    if (data.empty()) return;
    fftw_plan p;
    {
        std::lock_guard lock(planner_mutex);
        p = fftw_plan_dft_1d(as_int(data.size()), fc(data.data()), fc(data.data()), sign, FFTW_ESTIMATE);
    }
    Plan(p).execute();
}

}  // namespace

void forward(std::span<std::complex<double>> data) { complex_transform(data, FFTW_FORWARD); }
void inverse(std::span<std::complex<double>> data) { complex_transform(data, FFTW_BACKWARD); }

void forward_real(std::span<const double> in, std::span<std::complex<double>> out) {
    if (out.size() != in.size() / 2 + 1) throw std::invalid_argument("forward_real: output must hold n/2+1 bins");
    fftw_plan p;
    {
        std::lock_guard lock(planner_mutex);
        p = fftw_plan_dft_r2c_1d(as_int(in.size()), const_cast<double*>(in.data()), fc(out.data()),
                                 FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    Plan(p).execute();
}

void inverse_real(std::span<std::complex<double>> in, std::span<double> out) {
    if (in.size() != out.size() / 2 + 1) throw std::invalid_argument("inverse_real: input must hold n/2+1 bins");
    fftw_plan p;
    {
        std::lock_guard lock(planner_mutex);
        p = fftw_plan_dft_c2r_1d(as_int(out.size()), fc(in.data()), out.data(), FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
    }
    Plan(p).execute();
}

std::size_t inplace_size(std::size_t n) { return 2 * (n / 2 + 1); }

void forward_real_inplace(RealBuffer& buf, std::size_t n) {
    if (buf.size() < inplace_size(n)) throw std::invalid_argument("in-place buffer too small");
    fftw_plan p;
    {
        std::lock_guard lock(planner_mutex);
        p = fftw_plan_dft_r2c_1d(as_int(n), buf.data(), fc(as_complex(buf)), FFTW_ESTIMATE);
    }
    Plan(p).execute();
}

void inverse_real_inplace(RealBuffer& buf, std::size_t n) {
    if (buf.size() < inplace_size(n)) throw std::invalid_argument("in-place buffer too small");
    fftw_plan p;
    {
        std::lock_guard lock(planner_mutex);
        p = fftw_plan_dft_c2r_1d(as_int(n), fc(as_complex(buf)), buf.data(), FFTW_ESTIMATE);
    }
    Plan(p).execute();
}

double bin_omega(std::size_t k, std::size_t n, double fs) {
    const double kk = k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    return 2.0 * M_PI * fs * kk / static_cast<double>(n);
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace sideband::fft
