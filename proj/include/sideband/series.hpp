#pragma once

#include <stdexcept>
#include <vector>

#include "sideband/fft.hpp"

namespace sideband {

// Uniformly sampled real record. fs in Hz.
struct TimeSeries {
    double fs = 1.0;
    RealBuffer samples;
    double t0 = 0.0;

    std::size_t size() const { return samples.size(); }
    void validate() const {
        if (!(fs > 0)) throw std::invalid_argument("TimeSeries.fs must be > 0");
    }
};

}  // namespace sideband
