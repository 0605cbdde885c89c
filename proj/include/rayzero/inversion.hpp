#pragma once
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rayzero/atomic_data.hpp"
#include "rayzero/zeros.hpp"

//! Extraction of squared matrix elements from measured zero locations,
//! relative to fiducial strengths, with covariance and tail sensitivity.
//!
//! The zero locations are invariant under a common rescaling of every
//! strength (the amplitude is homogeneous in the M's), so at least one
//! multiplet must stay fixed; the fit parameters are log-scales of the
//! unknown groups, which also keeps every m_sq positive.
namespace rayzero {

//! Identifies the gap a measured zero sits in, by its bracketing poles.
//! `lo_n == 0` marks the interval below the system's first pole.
struct GapHint {
  int lo_n = 0;
  std::optional<int> lo_twice_j;
  int hi_n = 0;
  std::optional<int> hi_twice_j;

  std::string str() const;
};

//! One measured zero location.
struct MeasuredZero {
  double omega_zero = 0.0;   //!< cm^-1
  double sigma_omega = 0.0;  //!< 1-sigma uncertainty, cm^-1, > 0
  GapHint bracket;
};

//! A fitted degree of freedom: one fine-structure level when j is given,
//! otherwise a whole multiplet scaled coherently (the j components of a
//! zeroed-fine-structure multiplet are indistinguishable to A_zz).
struct UnknownGroup {
  int n = 0;
  std::optional<int> twice_j;

  std::string label() const;
};

struct InversionProblem {
  AtomicSystem system;               //!< initial values = dataset values
  std::vector<UnknownGroup> unknowns;
  std::vector<int> fiducial_ns;      //!< multiplets whose rel_unc propagates
  std::vector<MeasuredZero> measurements;

  //! Multiplets that are neither unknown nor fiducial (perturbed by
  //! tail_sensitivity together with the tail).
  std::vector<int> remote_ns() const;
  void validate() const;
};

struct UnknownEstimate {
  UnknownGroup group;
  std::vector<std::pair<LevelKey, double>> m_sq;  //!< fitted values, a0^2
  double scale = 1.0;           //!< fitted value / initial value
  double sigma_stat_rel = 0.0;  //!< statistical (measurement noise)
  double sigma_fid_rel = 0.0;   //!< systematic, fiducial strengths
  double sigma_tail_rel = 0.0;  //!< systematic, tail estimate
};

//! Elasticities d ln(m_sq_hat) / d ln(source) of every unknown with respect
//! to one systematic input.
struct SensitivityEntry {
  std::string source;
  std::vector<double> elasticity;  //!< one entry per unknown group
};

struct InversionResult {
  std::vector<UnknownEstimate> estimates;
  std::vector<LevelKey> covariance_keys;  //!< member levels of the unknowns
  Eigen::MatrixXd covariance;             //!< statistical, a0^4, PSD
  std::vector<double> residuals;          //!< predicted - measured, cm^-1
  std::vector<SensitivityEntry> sensitivity;
  int iterations = 0;
};

//! Predicted zero location for each measurement's gap, given the candidate
//! strengths carried by `system`.  Deterministic.
std::vector<double> forward_zeros(const AtomicSystem &system,
                                  const std::vector<MeasuredZero> &measurements,
                                  const SolverConfig &config = {});

//! Weighted least squares over the measurements (weights 1/sigma^2); exact
//! solve when square.  Covariance from the finite-difference Jacobian at
//! the solution; fiducial and tail uncertainties propagate to first order
//! as separate systematic terms.
InversionResult solve(const InversionProblem &problem,
                      const SolverConfig &config = {});

//! Re-solves with the tail and every remote multiplet scaled by
//! (1 +/- perturbation); returns the largest relative shift of each fitted
//! m_sq, in the order of problem.unknowns.
std::vector<double> tail_sensitivity(const InversionProblem &problem,
                                     const InversionResult &result,
                                     double perturbation,
                                     const SolverConfig &config = {});

//! Bound the truncated remainder of the level sum with a literature static
//! polarizability: tail = alpha_ref - alpha_partial(0), constant in omega.
//! Throws ValidationError when the loaded levels already exceed alpha_ref.
TailEstimate truncation_bound(const AtomicSystem &system, double alpha_ref,
                              double alpha_ref_unc);

//! Parse an inversion problem file (see README for the format) against a
//! loaded dataset.
InversionProblem load_problem(const std::string &path,
                              const AtomicSystem &system);

//! Parse a bracket hint of the form "lo[,j]:hi[,j]" with j one of 1/2, 3/2,
//! e.g. "6,3/2:7,1/2" or "2:3"; "0:<hi>" marks the sub-resonant interval.
GapHint parse_gap_hint(const std::string &text);

}  // namespace rayzero
