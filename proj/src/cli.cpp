#include "rayzero/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "rayzero/amplitude.hpp"

namespace rayzero::cli {

namespace {

//! Runs a command body, mapping exceptions to the documented exit codes:
//! solver/rank failures 3, everything else (input problems) 2.
template <typename F>
int guarded(std::ostream &err, F &&body) {
  try {
    body();
    return 0;
  } catch (const SolverError &e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

//! Primary output sink: file when out_path is set, else the given stream.
class Sink {
public:
  Sink(const std::string &path, std::ostream &fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ValidationError("cannot open output file: " + path);
      stream_ = &file_;
    }
  }
  std::ostream &get() { return *stream_; }

private:
  std::ofstream file_;
  std::ostream *stream_;
};

AtomicSystem load_dataset(const CommonOptions &common) {
  return load_system(common.dataset);
}

std::vector<double> linspace(double lo, double hi, int points) {
  if (points < 2) throw ValidationError("grid needs at least 2 points");
  if (!(lo < hi)) throw ValidationError("grid requires min < max");
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  return grid;
}

//! Deterministic standard normal (Box-Muller on mt19937_64), so synthesized
//! fixtures are byte-identical across platforms.
class Gaussian {
public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    constexpr double two_pi = 6.283185307179586;
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = two_pi * u2;
    spare_ = r * std::sin(phi);
    have_ = true;
    return r * std::cos(phi);
  }

private:
  double uniform() {
    return (rng_() >> 11) * 0x1.0p-53;  // [0, 1)
  }
  std::mt19937_64 rng_;
  bool have_ = false;
  double spare_ = 0.0;
};

std::string j_str(int twice_j) { return twice_j == 3 ? "3/2" : "1/2"; }

//! "n" or "n,1/2" or "n,3/2".
std::pair<int, std::optional<int>> parse_level_ref(const std::string &tok) {
  const auto comma = tok.find(',');
  const int n = std::stoi(tok.substr(0, comma));
  if (comma == std::string::npos) return {n, std::nullopt};
  const auto j = tok.substr(comma + 1);
  if (j == "1/2") return {n, 1};
  if (j == "3/2") return {n, 3};
  throw ValidationError("bad level reference '" + tok + "'");
}

}  // namespace

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double resolve_pole_ref(const AtomicSystem &system, const PoleRef &ref) {
  if (system.has_multiplet(ref.n)) {
    if (!ref.twice_j) return system.multiplet_omega(ref.n);
    for (const auto &lev : system.levels())
      if (lev.key.n == ref.n && lev.key.twice_j == *ref.twice_j)
        return lev.omega;
  }
  throw ValidationError("reference pole n=" + std::to_string(ref.n) +
                        (ref.twice_j ? ",j=" + j_str(*ref.twice_j) : "") +
                        " not in dataset");
}

int run_spectrum(const SpectrumOptions &opt, std::ostream &out,
                 std::ostream &err) {
  return guarded(err, [&] {
    const auto system = load_dataset(opt.common);
    double shift = 0.0;
    if (opt.rel_to) shift = resolve_pole_ref(system, *opt.rel_to);
    const auto grid =
        linspace(opt.omega_min + shift, opt.omega_max + shift, opt.points);

    const GuardPolicy guard{opt.common.guard_band};
    const auto scan = scan_spectrum(system, grid, guard, opt.common.threads);

    Sink sink(opt.common.out_path, out);
    std::ostream &csv = sink.get();
    csv << "omega_cm1,a_zz,a_xz,sigma_zz,sigma_xz,p_l\n";
    for (const auto &pt : scan.points)
      csv << fmt17(pt.omega) << ',' << fmt17(pt.a_zz) << ',' << fmt17(pt.a_xz)
          << ',' << fmt17(pt.sigma_zz) << ',' << fmt17(pt.sigma_xz) << ','
          << fmt17(pt.p_l) << '\n';

    std::ostream &sum = opt.common.out_path.empty() ? err : out;
    sum << "# dataset " << system.species() << " fingerprint "
        << file_fingerprint(opt.common.dataset) << "\n";
    if (system.truncated())
      sum << "# no tail configured: level sums are truncated\n";
    sum << "points: " << scan.points.size() << " accepted, "
        << scan.skipped.size() << " skipped (guard band)\n";

    const auto min_it = std::min_element(
        scan.points.begin(), scan.points.end(),
        [](const SpectrumPoint &a, const SpectrumPoint &b) { return a.p_l < b.p_l; });
    sum << "min P_L = " << fmt17(min_it->p_l) << " at omega = "
        << fmt17(min_it->omega) << " cm^-1\n";

    // contiguous runs of P_L < -0.999 are the A_zz-zero dips
    int dips = 0;
    std::ostringstream where;
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
      if (scan.points[i].p_l >= -0.999) continue;
      std::size_t j = i;
      double best_pl = 1.0, best_w = 0.0;
      while (j < scan.points.size() && scan.points[j].p_l < -0.999) {
        if (scan.points[j].p_l < best_pl) {
          best_pl = scan.points[j].p_l;
          best_w = scan.points[j].omega;
        }
        ++j;
      }
      ++dips;
      where << (dips > 1 ? ", " : "") << fmt17(best_w)
            << (opt.rel_to ? " (" + fmt17(best_w - shift) + " rel)" : "");
      i = j;
    }
    sum << "P_L < -0.999 dips: " << dips
        << (dips ? " at omega = " + where.str() : "") << "\n";
  });
}

namespace {

void write_zero_rows(std::ostream &csv, const std::vector<ZeroRecord> &records) {
  for (const auto &r : records)
    csv << to_string(r.method) << ',' << r.ref_n << ',' << fmt17(r.omega_zero)
        << ',' << fmt17(r.offset) << ',' << fmt17(r.bracket_lo) << ','
        << fmt17(r.bracket_hi) << ',' << fmt17(r.residual) << '\n';
}

}  // namespace

int run_zeros(const ZerosOptions &opt, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    const auto system = load_dataset(opt.common);
    opt.solver.validate();

    double shift = 0.0;
    if (opt.rel_to) shift = resolve_pole_ref(system, *opt.rel_to);

    std::pair<double, double> range{0.0, 0.0};
    std::pair<int, int> nsel{0, 1 << 30};
    if (opt.range) {
      range = {opt.range->first + shift, opt.range->second + shift};
    } else if (opt.multiplets) {
      nsel = *opt.multiplets;
      if (nsel.first > nsel.second)
        throw ValidationError("--multiplets range is empty");
      // span from the pole below the first selected multiplet to just above
      // the last one, clamped below the top of the loaded set
      const auto &poles = system.poles();
      if (!system.has_multiplet(nsel.first) || !system.has_multiplet(nsel.second))
        throw ValidationError("--multiplets outside the loaded set");
      double lo = 0.0;
      for (const auto &p : poles) {
        const double w = system.levels()[p.level_index.front()].omega;
        if (system.levels()[p.level_index.front()].key.n < nsel.first)
          lo = std::max(lo, w);
      }
      double hi = system.multiplet_omega(nsel.second) + 1.0;
      hi = std::min(hi, poles.back().omega - 1e-6);
      range = {lo, hi};
    } else {
      throw ValidationError("zeros needs --min/--max or --multiplets");
    }

    std::vector<std::string> warnings;
    std::vector<ZeroRecord> records;
    auto want = [&](ZeroMethod m) {
      return std::find(opt.methods.begin(), opt.methods.end(), m) !=
             opt.methods.end();
    };
    auto keep = [&](const ZeroRecord &r) {
      return r.ref_n >= nsel.first && r.ref_n <= nsel.second;
    };

    if (want(ZeroMethod::Numerical))
      for (const auto &r : find_zeros(system, range, opt.solver, &warnings))
        if (keep(r)) records.push_back(r);
    if (want(ZeroMethod::NumericalResonanceOnly))
      for (const auto &r :
           find_zeros_resonance_only(system, range, opt.solver, &warnings))
        if (keep(r)) records.push_back(r);
    if (want(ZeroMethod::ApproxAnalytic)) {
      // one estimate per selected multiplet intersecting the range
      for (int n : system.multiplet_ns()) {
        if (n < nsel.first || n > nsel.second) continue;
        const double wn = system.multiplet_omega(n);
        if (wn <= range.first || wn > range.second + 1.0) continue;
        if (n == system.pole_multiplet(0)) continue;  // no estimate for the resonance line
        records.push_back(approx_zero(system, n, opt.approx_refine));
      }
    }

    if (opt.rel_to)
      for (auto &r : records) {
        r.offset = r.omega_zero - shift;
        r.ref_n = opt.rel_to->n;
      }

    std::stable_sort(records.begin(), records.end(),
                     [](const ZeroRecord &a, const ZeroRecord &b) {
                       if (a.ref_n != b.ref_n) return a.ref_n < b.ref_n;
                       return a.method < b.method;
                     });

    Sink sink(opt.common.out_path, out);
    std::ostream &csv = sink.get();
    if (opt.common.format == "human") {
      csv << "zeros of A_zz for " << system.species() << " ("
          << records.size() << " records)\n";
      for (const auto &r : records) {
        char line[160];
        std::snprintf(line, sizeof line,
                      "  n=%-2d %-24s omega_zero = %14.6f  offset = %10.4f  "
                      "residual = %.2e",
                      r.ref_n, to_string(r.method).c_str(), r.omega_zero,
                      r.offset, r.residual);
        csv << line << "\n";
      }
    } else {
      csv << "method,ref_n,omega_zero_cm1,offset_cm1,bracket_lo,bracket_hi,residual\n";
      write_zero_rows(csv, records);
    }

    std::ostream &sum = opt.common.out_path.empty() ? err : out;
    if (records.empty()) sum << "warning: no zero in the requested range\n";
    for (const auto &w : warnings) sum << "warning: " << w << "\n";
  });
}

int run_invert(const InvertOptions &opt, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    const auto system = load_dataset(opt.common);
    const auto problem = load_problem(opt.problem_path, system);
    const auto result = solve(problem, opt.solver);
    const auto shifts = tail_sensitivity(problem, result, opt.perturbation,
                                         opt.solver);

    Sink sink(opt.common.out_path, out);
    std::ostream &rep = sink.get();

    if (opt.common.format == "csv") {
      rep << "level,m_sq_a0sq,scale,sigma_stat_rel,sigma_fid_rel,sigma_tail_rel\n";
      for (const auto &est : result.estimates)
        for (const auto &[key, value] : est.m_sq)
          rep << key.label() << ',' << fmt17(value) << ',' << fmt17(est.scale)
              << ',' << fmt17(est.sigma_stat_rel) << ','
              << fmt17(est.sigma_fid_rel) << ',' << fmt17(est.sigma_tail_rel)
              << '\n';
      rep << "measurement,omega_measured_cm1,residual_cm1\n";
      for (std::size_t k = 0; k < result.residuals.size(); ++k)
        rep << k << ',' << fmt17(problem.measurements[k].omega_zero) << ','
            << fmt17(result.residuals[k]) << '\n';
      rep << "sensitivity_source";
      for (const auto &est : result.estimates) rep << ',' << est.group.label();
      rep << '\n';
      for (const auto &entry : result.sensitivity) {
        rep << entry.source;
        for (double e : entry.elasticity) rep << ',' << fmt17(e);
        rep << '\n';
      }
      rep << "tail_perturbation_rel_shift";
      for (double s : shifts) rep << ',' << fmt17(s);
      rep << '\n';
      return;
    }

    rep << "inversion report for " << system.species() << " ("
        << problem.measurements.size() << " measurements, "
        << problem.unknowns.size() << " unknowns, " << result.iterations
        << " iterations)\n\nfitted squared matrix elements (a0^2):\n";
    for (const auto &est : result.estimates) {
      for (const auto &[key, value] : est.m_sq) {
        char line[200];
        std::snprintf(line, sizeof line,
                      "  %-7s m_sq = %.9g   (x%.9g of input)\n", key.label().c_str(),
                      value, est.scale);
        rep << line;
      }
      char unc[200];
      std::snprintf(unc, sizeof unc,
                    "          rel. unc: statistical %.3g, fiducial %.3g, tail %.3g\n",
                    est.sigma_stat_rel, est.sigma_fid_rel, est.sigma_tail_rel);
      rep << unc;
    }
    rep << "\nstatistical covariance (a0^4) over [";
    for (std::size_t i = 0; i < result.covariance_keys.size(); ++i)
      rep << (i ? ", " : "") << result.covariance_keys[i].label();
    rep << "]:\n";
    for (int i = 0; i < result.covariance.rows(); ++i) {
      rep << " ";
      for (int j = 0; j < result.covariance.cols(); ++j) {
        char cell[32];
        std::snprintf(cell, sizeof cell, " %12.5e", result.covariance(i, j));
        rep << cell;
      }
      rep << "\n";
    }
    rep << "\nresiduals (predicted - measured, cm^-1):\n";
    for (std::size_t k = 0; k < result.residuals.size(); ++k)
      rep << "  [" << problem.measurements[k].bracket.str()
          << "] " << fmt17(result.residuals[k]) << "\n";
    rep << "\nsensitivity d ln(m_sq) / d ln(source):\n";
    for (const auto &entry : result.sensitivity) {
      rep << "  " << entry.source << ":";
      for (std::size_t g = 0; g < entry.elasticity.size(); ++g) {
        char cell[64];
        std::snprintf(cell, sizeof cell, "  %s=%.4g",
                      problem.unknowns[g].label().c_str(), entry.elasticity[g]);
        rep << cell;
      }
      rep << "\n";
    }
    char pert[160];
    std::snprintf(pert, sizeof pert,
                  "\nremote +/-%.0f%% perturbation (levels beyond fiducials "
                  "+ tail): max relative shift\n",
                  100.0 * opt.perturbation);
    rep << pert;
    for (std::size_t g = 0; g < shifts.size(); ++g) {
      char line[120];
      std::snprintf(line, sizeof line, "  %-7s %.6e\n",
                    problem.unknowns[g].label().c_str(), shifts[g]);
      rep << line;
    }
  });
}

int run_synthesize(const SynthesizeOptions &opt, std::ostream &out,
                   std::ostream &err) {
  return guarded(err, [&] {
    const auto base = load_dataset(opt.common);
    if (opt.unknowns.empty()) throw ValidationError("need at least one --unknown");
    if (opt.brackets.empty()) throw ValidationError("need at least one --measure");
    if (!(opt.sigma > 0.0)) throw ValidationError("sigma must be positive");
    if (opt.noise < 0.0) throw ValidationError("noise must be >= 0");

    // truth system: dataset values with the requested scale factors applied
    AtomicSystem truth = base;
    for (const auto &[token, factor] : opt.truth_scales) {
      if (!(factor > 0.0))
        throw ValidationError("truth scale for " + token + " must be positive");
      const auto [n, tj] = parse_level_ref(token);
      std::vector<std::pair<LevelKey, double>> assign;
      for (int i : base.multiplet(n)) {
        const auto &lev = base.levels()[i];
        if (tj && lev.key.twice_j != *tj) continue;
        assign.emplace_back(lev.key, lev.m_sq * factor);
      }
      if (assign.empty())
        throw ValidationError("truth scale matches no level: " + token);
      truth = truth.with_m_sq(assign);
    }

    std::vector<MeasuredZero> measurements;
    for (const auto &text : opt.brackets) {
      MeasuredZero m;
      m.bracket = parse_gap_hint(text);
      m.sigma_omega = opt.sigma;
      measurements.push_back(m);
    }
    const auto zeros = forward_zeros(truth, measurements, opt.solver);

    Gaussian gauss(opt.seed);
    for (std::size_t k = 0; k < measurements.size(); ++k)
      measurements[k].omega_zero =
          zeros[k] + (opt.noise > 0.0 ? opt.noise * gauss() : 0.0);

    Sink sink(opt.common.out_path, out);
    std::ostream &f = sink.get();
    f << "# synthesized inversion problem  seed=" << opt.seed
      << " noise=" << fmt17(opt.noise) << " dataset_fingerprint="
      << file_fingerprint(opt.common.dataset) << "\n";
    f << "species=" << base.species() << "\n";
    for (const auto &g : opt.unknowns) {
      f << "unknown n=" << g.n;
      if (g.twice_j) f << " j=" << j_str(*g.twice_j);
      f << "\n";
    }
    for (int n : opt.fiducial_ns) f << "fiducial n=" << n << "\n";
    for (const auto &m : measurements)
      f << "measurement omega=" << fmt17(m.omega_zero) << " sigma="
        << fmt17(m.sigma_omega) << " bracket=" << m.bracket.str() << "\n";
  });
}

int run_polarizability(const PolarizabilityOptions &opt, std::ostream &out,
                       std::ostream &err) {
  return guarded(err, [&] {
    auto system = load_dataset(opt.common);
    const GuardPolicy guard{opt.common.guard_band};

    std::ostream &sum = opt.common.out_path.empty() ? err : out;
    const double alpha_partial = dynamic_polarizability(system, 0.0, guard);
    sum << "# dataset " << system.species() << " fingerprint "
        << file_fingerprint(opt.common.dataset) << "\n";
    sum << "alpha_partial(0) = " << fmt17(alpha_partial) << " a.u. (loaded levels)\n";

    if (opt.alpha_ref) {
      const auto [ref, unc] = *opt.alpha_ref;
      const auto tail = truncation_bound(system, ref, unc);
      system = system.with_tail(tail);
      sum << "alpha_ref = " << fmt17(ref) << " +/- " << fmt17(unc)
          << " a.u. -> tail = " << fmt17(ref - alpha_partial)
          << " a.u. (rel unc " << fmt17(tail.rel_unc) << ")\n";
      sum << "alpha(0) with tail = "
          << fmt17(dynamic_polarizability(system, 0.0, guard)) << " a.u.\n";
      sum << "resonance-multiplet share of alpha_ref = "
          << fmt17(dynamic_polarizability(
                       system.restricted_to({system.pole_multiplet(0)}), 0.0, guard) /
                   ref)
          << "\n";
    } else if (system.truncated()) {
      sum << "# no tail configured: alpha is a truncated sum\n";
    }

    Sink sink(opt.common.out_path, out);
    std::ostream &csv = sink.get();
    csv << "omega_cm1,alpha_au\n";
    if (opt.omega) {
      csv << fmt17(*opt.omega) << ','
          << fmt17(dynamic_polarizability(system, *opt.omega, guard)) << '\n';
    } else if (opt.range) {
      for (double w : linspace(opt.range->first, opt.range->second, opt.points)) {
        try {
          csv << fmt17(w) << ','
              << fmt17(dynamic_polarizability(system, w, guard)) << '\n';
        } catch (const GuardBandError &) {
          // skip guarded points, matching scan_spectrum behavior
        }
      }
    } else {
      throw ValidationError("polarizability needs --omega or --min/--max/--points");
    }
  });
}

}  // namespace rayzero::cli
