#pragma once

// Unit conventions used throughout:
//   - config/couplings are plain frequencies f = omega/2pi in MHz
//   - internal Hamiltonian matrix elements are angular frequencies in rad/ns
//   - time is in ns
//   - particle currents are reported in 1/us
// 1 MHz = 1e-3 cycles/ns, so omega[rad/ns] = 2*pi*1e-3 * f[MHz].

namespace ladderflux {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kMhzToRadPerNs = 2.0 * kPi * 1e-3;
inline constexpr double kPerNsToPerUs = 1e3;

inline double rad_per_ns(double f_mhz) { return kMhzToRadPerNs * f_mhz; }

}  // namespace ladderflux
