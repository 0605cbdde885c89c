#pragma once
#include <optional>
#include <span>
#include <vector>

#include "rayzero/atomic_data.hpp"

//! Polarization-resolved Rayleigh scattering amplitudes, cross-sections,
//! depolarization degree and the dynamic polarizability.
//!
//! Geometry: excitation propagates along y, linearly polarized along z (ZZ)
//! or x (XZ); the analyzer transmits the z component of the scattered light.
//! Scattering is elastic (omega' = omega).  Natural widths are left out of
//! the denominators; a guard band around every pole stands in for them.
namespace rayzero {

enum class Polarization { ZZ, XZ };

//! One evaluated frequency of a spectrum scan.
struct SpectrumPoint {
  double omega = 0.0;     //!< cm^-1
  double a_zz = 0.0;      //!< a0^2 cm
  double a_xz = 0.0;      //!< a0^2 cm
  double sigma_zz = 0.0;  //!< relative intensity, common arbitrary scale
  double sigma_xz = 0.0;
  double p_l = 0.0;       //!< (sigma_zz - sigma_xz)/(sigma_zz + sigma_xz)
};

//! Minimum allowed detuning from any pole of the included level set.
struct GuardPolicy {
  double guard_band = 0.5;  //!< cm^-1
};

//! Fixed scale of cross_section(): sigma = k_cross_section * omega^4 |A|^2.
//! Only ratios, zero locations and P_L are physically meaningful here.
inline constexpr double k_cross_section = 1.0;

//! Remote-level sum P_zz (a0^2 cm): over every included level,
//!   2M_3/2 [1/(w_i-w) + 1/(w_i+w)] + M_1/2 [same],
//! plus the tail when configured.  exclude_n removes multiplet n.
double p_zz(const AtomicSystem &system, double omega,
            std::optional<int> exclude_n = std::nullopt,
            const GuardPolicy &guard = {});

//! Remote-level sum Q_xz (a0^2 cm): signs +,-,-,+ on the
//! (3/2 resonant, 1/2 resonant, 3/2 anti-resonant, 1/2 anti-resonant) terms.
double q_xz(const AtomicSystem &system, double omega,
            std::optional<int> exclude_n = std::nullopt,
            const GuardPolicy &guard = {});

//! Scattering amplitude in the near-multiplet split form,
//!   A_zz = -(1/9) (near-multiplet terms - P_zz^n),
//! evaluated with the given reference multiplet.  The value is independent
//! of the choice of reference multiplet to floating-point accuracy.
double amplitude_split(const AtomicSystem &system, double omega,
                       Polarization pol, int ref_n,
                       const GuardPolicy &guard = {});

//! Scattering amplitude; reference multiplet chosen nearest to omega.
double amplitude(const AtomicSystem &system, double omega, Polarization pol,
                 const GuardPolicy &guard = {});

//! Relative differential cross-section k * omega^4 |A|^2 (omega > 0).
double cross_section(const AtomicSystem &system, double omega,
                     Polarization pol, const GuardPolicy &guard = {});

//! Linear depolarization degree (sigma_zz - sigma_xz)/(sigma_zz + sigma_xz).
//! Throws ValidationError when both intensities vanish.
double depolarization(const AtomicSystem &system, double omega,
                      const GuardPolicy &guard = {});

struct ScanResult {
  std::vector<SpectrumPoint> points;
  std::vector<double> skipped;  //!< grid points rejected by the guard band
};

//! Evaluate a spectrum on a grid.  Guard-band violators are skipped and
//! reported; an empty accepted grid is an error.  Points may be evaluated
//! in parallel; the result is bitwise independent of the thread count.
ScanResult scan_spectrum(const AtomicSystem &system,
                         std::span<const double> grid,
                         const GuardPolicy &guard = {}, int threads = 1);

//! Ground-state dynamic polarizability in atomic units,
//!   alpha(w) = (1/9) sum_i (2M_i3/2 + M_i1/2) 2 w_i/(w_i^2 - w^2)
//! converted to a.u.; omega = 0 gives the static value.  The 1/9 angular
//! prefactor is fixed by validation against the hydrogen and Li literature
//! values (see tests).
double dynamic_polarizability(const AtomicSystem &system, double omega,
                              const GuardPolicy &guard = {});

namespace detail {

//! Full direct sums with no guard-band check; omega may be any real value
//! (used by the zero solver and the parity checks).  Kahan-compensated.
double a_zz_raw(const AtomicSystem &system, double omega);
double a_xz_raw(const AtomicSystem &system, double omega);

//! Throws GuardBandError if omega is within the guard band of a pole of the
//! included set (multiplet exclude_n exempted).
void check_guard(const AtomicSystem &system, double omega,
                 const GuardPolicy &guard,
                 std::optional<int> exclude_n = std::nullopt);

}  // namespace detail

}  // namespace rayzero
