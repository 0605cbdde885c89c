#pragma once
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rayzero/inversion.hpp"
#include "rayzero/zeros.hpp"

//! Command implementations behind the rayzero tool.  Each run_* function
//! writes its primary output (CSV or report) to `out` and diagnostics to
//! `err`, returning a process exit code: 0 success, 2 input/validation
//! error, 3 solver/rank error.
namespace rayzero::cli {

inline constexpr const char *version = "0.1.0";

//! A pole named on the command line, e.g. --rel-to n=7,j=3/2.
struct PoleRef {
  int n = 0;
  std::optional<int> twice_j;
};

struct CommonOptions {
  std::string dataset;
  std::string out_path;        //!< empty: primary output goes to `out`
  std::string format = "csv";  //!< csv | human
  double guard_band = 0.5;     //!< cm^-1
  int threads = 1;
};

struct SpectrumOptions {
  CommonOptions common;
  double omega_min = 0.0;  //!< absolute, or relative when rel_to is set
  double omega_max = 0.0;
  int points = 0;
  std::optional<PoleRef> rel_to;
};

struct ZerosOptions {
  CommonOptions common;
  std::optional<std::pair<double, double>> range;  //!< absolute or rel_to-relative
  std::optional<std::pair<int, int>> multiplets;   //!< inclusive n range
  std::vector<ZeroMethod> methods = {ZeroMethod::Numerical};
  std::optional<PoleRef> rel_to;
  int approx_refine = 0;  //!< fixed-point iterations for the analytic estimate
  SolverConfig solver;
};

struct InvertOptions {
  CommonOptions common;
  std::string problem_path;
  double perturbation = 0.10;  //!< for the tail-sensitivity section
  SolverConfig solver;
};

struct SynthesizeOptions {
  CommonOptions common;
  std::vector<UnknownGroup> unknowns;
  std::vector<int> fiducial_ns;
  std::vector<std::string> brackets;  //!< gap hints, "lo[,j]:hi[,j]"
  std::vector<std::pair<std::string, double>> truth_scales;  //!< "n[,j]" -> factor
  double noise = 0.0;   //!< cm^-1 added to the true zero locations
  double sigma = 0.01;  //!< recorded sigma_omega, cm^-1
  std::uint64_t seed = 0;
  SolverConfig solver;
};

struct PolarizabilityOptions {
  CommonOptions common;
  std::optional<double> omega;                     //!< single frequency
  std::optional<std::pair<double, double>> range;  //!< or a grid
  int points = 0;
  std::optional<std::pair<double, double>> alpha_ref;  //!< value, unc (a.u.)
};

int run_spectrum(const SpectrumOptions &opt, std::ostream &out, std::ostream &err);
int run_zeros(const ZerosOptions &opt, std::ostream &out, std::ostream &err);
int run_invert(const InvertOptions &opt, std::ostream &out, std::ostream &err);
int run_synthesize(const SynthesizeOptions &opt, std::ostream &out, std::ostream &err);
int run_polarizability(const PolarizabilityOptions &opt, std::ostream &out,
                       std::ostream &err);

//! Full-precision decimal form of a double (17 significant digits).
std::string fmt17(double x);

//! Resolve a named pole against a system (throws when absent).
double resolve_pole_ref(const AtomicSystem &system, const PoleRef &ref);

}  // namespace rayzero::cli
