#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

namespace sideband {

template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) { ::operator delete(p, alignment); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using RealBuffer = std::vector<double, AlignedAllocator<double>>;
using ComplexBuffer = std::vector<std::complex<double>, AlignedAllocator<std::complex<double>>>;

namespace fft {

// Unnormalised DFTs. forward uses exp(−iωt) (X_k = Σ x_n e^{−2πikn/N}); inverse uses exp(+iωt).
void forward(std::span<std::complex<double>> data);
void inverse(std::span<std::complex<double>> data);

// Real-to-half-complex and back, out of place. inverse_real overwrites its input.
void forward_real(std::span<const double> in, std::span<std::complex<double>> out);
void inverse_real(std::span<std::complex<double>> in, std::span<double> out);

// In-place real transform on a buffer of 2(n/2+1) doubles holding n samples.
void forward_real_inplace(RealBuffer& buf, std::size_t n);
void inverse_real_inplace(RealBuffer& buf, std::size_t n);
std::size_t inplace_size(std::size_t n);
inline std::complex<double>* as_complex(RealBuffer& buf) {
    return reinterpret_cast<std::complex<double>*>(buf.data());
}

// Angular frequency of DFT bin k for n samples at rate fs (Hz); bins k >= n/2 are negative.
double bin_omega(std::size_t k, std::size_t n, double fs);

std::size_t next_pow2(std::size_t n);

}  // namespace fft
}  // namespace sideband
