#pragma once

#include <cmath>
#include <numbers>

namespace sideband {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K

// Files and the CLI speak Hz; everything else is rad/s.
constexpr double hz_to_rad(double f_hz) { return two_pi * f_hz; }
constexpr double rad_to_hz(double w) { return w / two_pi; }

// Bose occupancy in the high-temperature limit, k_B T / (hbar Omega).
inline double thermal_occupancy(double temperature_k, double omega) {
    return k_boltzmann * temperature_k / (hbar * omega);
}

}  // namespace sideband
