#pragma once

//! Physical constants and unit conventions.
//!
//! Internal units throughout the library:
//!   - level energies / photon frequencies: cm^-1
//!   - squared radial matrix elements M:    a0^2 (atomic units)
//!   - amplitudes A_zz, A_xz, P_zz, Q_xz:   a0^2 * cm  (i.e. a0^2 per cm^-1)
//!   - polarizabilities:                    atomic units (a0^3-equivalent)
namespace rayzero::constants {

//! 1 hartree expressed in cm^-1 (CODATA 2018, E_h/(h c)).
inline constexpr double hartree_cm1 = 219474.6313632;

inline constexpr double cm1_to_hartree = 1.0 / hartree_cm1;

//! Constant C in the adopted oscillator-strength convention.
//! For absorption on s_1/2 -> p_j the f-value per fine-structure component is
//!   f_j = (2/3) * omega_au * w_j * M_j,   w_3/2 = 2/3, w_1/2 = 1/3,
//! so M_j = C * f_j / (omega_au * w_j) with C = 3/2.  Validated against the
//! exact hydrogen 1s-2p values in the unit tests.
inline constexpr double f_convention_c = 1.5;

//! Angular weight w_j for s_1/2 -> p_j (twice_j is 2j).
inline constexpr double angular_weight(int twice_j) {
  return twice_j == 3 ? 2.0 / 3.0 : 1.0 / 3.0;
}

//! Two levels closer than this (cm^-1) are treated as one pole.
inline constexpr double pole_merge_eps_cm1 = 1e-6;

}  // namespace rayzero::constants
