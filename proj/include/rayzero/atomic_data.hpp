#pragma once
#include <optional>
#include <string>
#include <vector>

#include "rayzero/errors.hpp"

//! Atomic level data: loading, validation, unit conversion.
namespace rayzero {

//! One-electron level label (n, l, j), with j stored as 2j.
struct LevelKey {
  int n = 0;        //!< principal quantum number, > 0
  int l = 0;        //!< orbital angular momentum, 0 or 1 here
  int twice_j = 1;  //!< 2j; 1 or 3 for p levels, 1 for the s ground level

  bool ok() const;
  std::string label() const;  //!< e.g. "7p_3/2"

  friend bool operator==(const LevelKey &a, const LevelKey &b) {
    return a.n == b.n && a.l == b.l && a.twice_j == b.twice_j;
  }
  friend bool operator<(const LevelKey &a, const LevelKey &b) {
    if (a.n != b.n) return a.n < b.n;
    if (a.l != b.l) return a.l < b.l;
    return a.twice_j < b.twice_j;
  }
};

//! An np_j level reachable from the ground level by electric dipole.
struct ExcitedLevel {
  LevelKey key;
  double omega = 0.0;          //!< transition frequency from ground, cm^-1
  double m_sq = 0.0;           //!< squared radial matrix element, a0^2
  double m_sq_rel_unc = 0.0;   //!< relative 1-sigma uncertainty of m_sq
  std::optional<double> gamma; //!< natural width, cm^-1 (guard-band checks only)
};

//! Aggregate contribution of all levels beyond the loaded set, modeled as
//! constant in omega over the working window (valid below the lowest
//! omitted pole).
struct TailEstimate {
  double p_zz = 0.0;    //!< additive contribution to P_zz, a0^2 * cm
  double q_xz = 0.0;    //!< additive contribution to Q_xz, a0^2 * cm
  double rel_unc = 0.0; //!< relative uncertainty of the tail
};

//! A pole of the scattering amplitude: one or more levels whose energies
//! coincide to within the merge tolerance (deliberately zeroed fine
//! structure collapses a multiplet into a single pole).
struct Pole {
  double omega = 0.0;           //!< pole position, cm^-1
  std::vector<int> level_index; //!< indices into AtomicSystem::levels()
};

//! Immutable-after-load set of excited levels above one s_1/2 ground level.
//! Levels are sorted by increasing omega; the pole list merges degenerate
//! entries and is strictly increasing.
class AtomicSystem {
public:
  AtomicSystem() = default;
  AtomicSystem(std::string species, LevelKey ground,
               std::vector<ExcitedLevel> levels,
               std::optional<TailEstimate> tail = std::nullopt);

  const std::string &species() const { return species_; }
  const LevelKey &ground() const { return ground_; }
  const std::vector<ExcitedLevel> &levels() const { return levels_; }
  const std::vector<Pole> &poles() const { return poles_; }
  const std::optional<TailEstimate> &tail() const { return tail_; }

  //! True when no tail estimate is configured (outputs are truncated sums).
  bool truncated() const { return !tail_.has_value(); }

  bool has_multiplet(int n) const;
  //! Indices of the levels of multiplet n (1 or 2 entries).
  std::vector<int> multiplet(int n) const;
  //! Distinct principal quantum numbers, ascending.
  std::vector<int> multiplet_ns() const;
  //! Strength-weighted reference frequency of multiplet n:
  //! sum(w_j M_j omega_j)/sum(w_j M_j); equals the level energy when the
  //! fine structure is zeroed.
  double multiplet_omega(int n) const;
  //! Combined strength 2 M_{n3/2} + M_{n1/2} of multiplet n.
  double multiplet_strength(int n) const;
  //! Multiplet of the pole (n shared by all member levels).
  int pole_multiplet(int pole_index) const;

  //! Copy with a different tail.
  AtomicSystem with_tail(std::optional<TailEstimate> tail) const;
  //! Copy restricted to the given multiplets (tail dropped).
  AtomicSystem restricted_to(const std::vector<int> &ns) const;
  //! Copy with m_sq of the listed levels replaced.
  AtomicSystem with_m_sq(const std::vector<std::pair<LevelKey, double>> &assign) const;
  //! Copy with m_sq of every level of the listed multiplets scaled by c.
  AtomicSystem with_scaled_multiplets(const std::vector<int> &ns, double c) const;

private:
  void validate_and_index();

  std::string species_;
  LevelKey ground_{2, 0, 1};
  std::vector<ExcitedLevel> levels_;
  std::optional<TailEstimate> tail_;
  std::vector<Pole> poles_;
};

//! Convert an absorption oscillator strength f for the s_1/2 -> p_j
//! component at frequency omega (cm^-1) to the squared radial matrix
//! element in a0^2.  Throws ValidationError on nonpositive inputs.
double f_to_msq(double f, double omega_cm1, int twice_j);

//! Inverse of f_to_msq (exact round trip).
double msq_to_f(double m_sq, double omega_cm1, int twice_j);

//! Fine-structure splitting omega(n,3/2) - omega(n,1/2) of multiplet n;
//! 0 when only one component is present; throws when absent.
double fs_splitting(const AtomicSystem &system, int n);

enum class ValueKind { F, MSq };

//! Load a dataset file.  Format (normative):
//!   # comment lines
//!   species=<name> energy_unit=cm-1 value=<f|m_sq>
//!   n l 2j energy value rel_unc [gamma]
//! Oscillator strengths are converted to m_sq on load; `kind` overrides the
//! header declaration when given.
AtomicSystem load_system(const std::string &path,
                         std::optional<ValueKind> kind = std::nullopt);

//! FNV-1a fingerprint of a file's bytes, as printed by `--version` and in
//! output headers for provenance.
std::string file_fingerprint(const std::string &path);

}  // namespace rayzero
