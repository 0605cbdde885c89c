#pragma once
#include <string>
#include <utility>
#include <vector>

#include "rayzero/amplitude.hpp"
#include "rayzero/atomic_data.hpp"

//! Location of the zeros of A_zz between resonance poles.
//!
//! For parallel polarizations every matrix-element product is positive, so
//! A_zz runs from -inf to +inf across each open interval between adjacent
//! poles and crosses zero exactly once (it is strictly increasing in omega
//! away from the poles).  Below the lowest pole it is positive throughout.
namespace rayzero {

enum class ZeroMethod { Numerical, NumericalResonanceOnly, ApproxAnalytic };

std::string to_string(ZeroMethod m);

//! A located root of A_zz.
struct ZeroRecord {
  double omega_zero = 0.0;  //!< cm^-1
  double bracket_lo = 0.0;  //!< lower bracketing pole (0 for sub-resonant)
  double bracket_hi = 0.0;  //!< upper bracketing pole
  int ref_n = 0;            //!< multiplet the offset refers to
  double offset = 0.0;      //!< omega_zero - reference pole, cm^-1
  ZeroMethod method = ZeroMethod::Numerical;
  double residual = 0.0;    //!< |A_zz(omega_zero)| achieved, a0^2 cm
};

struct SolverConfig {
  double abs_tol_omega = 1e-8;    //!< cm^-1; tolerance is on omega, not on A
  int max_iter = 200;
  int scan_points_per_gap = 1024; //!< pre-scan density (uniqueness check)
  //! Brackets start this fraction of the gap width away from each pole.
  double bracket_margin_frac = 1e-6;

  void validate() const;
};

//! Locate all zeros of A_zz whose bracketing interval intersects
//! [range.first, range.second].  Offsets are reported relative to the upper
//! bracketing pole.  A gap fully inside the range that shows no sign change
//! is an error (the pole structure guarantees one); more than one root in a
//! gap is reported in full with a warning appended to `warnings`.
std::vector<ZeroRecord> find_zeros(const AtomicSystem &system,
                                   std::pair<double, double> range,
                                   const SolverConfig &config = {},
                                   std::vector<std::string> *warnings = nullptr);

//! As find_zeros, but each gap is solved on the system truncated to the
//! resonance multiplet (the lowest one) plus the multiplet of the gap's
//! reference pole: the "resonance-only" column of the zero tables.
std::vector<ZeroRecord>
find_zeros_resonance_only(const AtomicSystem &system,
                          std::pair<double, double> range,
                          const SolverConfig &config = {},
                          std::vector<std::string> *warnings = nullptr);

//! Leading-order analytic estimate of the zero below multiplet n:
//!   offset = (2 M_{n3/2} + M_{n1/2}) / P_zz^n,
//! with P_zz^n the remote-level sum evaluated at the multiplet frequency.
//! fixed_point_iters > 0 re-evaluates P_zz^n at the estimated zero that many
//! times (off by default; the plain estimate is the tabulated convention).
ZeroRecord approx_zero(const AtomicSystem &system, int n,
                       int fixed_point_iters = 0);

//! Root of A_zz inside the gap between two adjacent poles of the system,
//! identified by their indices into system.poles().  Used by the inversion
//! forward model.
ZeroRecord find_zero_in_gap(const AtomicSystem &system, int lo_pole,
                            int hi_pole, const SolverConfig &config = {});

}  // namespace rayzero
