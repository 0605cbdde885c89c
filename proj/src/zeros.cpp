#include "rayzero/zeros.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rayzero/constants.hpp"

namespace rayzero {

std::string to_string(ZeroMethod m) {
  switch (m) {
    case ZeroMethod::Numerical: return "Numerical";
    case ZeroMethod::NumericalResonanceOnly: return "NumericalResonanceOnly";
    case ZeroMethod::ApproxAnalytic: return "ApproxAnalytic";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(abs_tol_omega > 0.0) || max_iter <= 0 || scan_points_per_gap <= 0 ||
      !(bracket_margin_frac > 0.0))
    throw ValidationError("solver configuration values must be positive");
}

namespace {

struct Interval {
  double lo = 0.0, hi = 0.0;          // search window
  double pole_lo = 0.0, pole_hi = 0.0; // bracketing poles (pole_lo 0 if none)
  int ref_n = 0;                       // multiplet of the upper pole
  bool full_gap = false;               // window covers the whole gap
};

//! Bisection to abs_tol_omega followed by a short secant polish; keeps the
//! iterate with the smallest |f| seen.  f must change sign on [a, b].
template <typename F>
ZeroRecord refine_root(F &&f, double a, double b, double fa, double fb,
                       const SolverConfig &config) {
  double best_x = std::abs(fa) < std::abs(fb) ? a : b;
  double best_f = std::min(std::abs(fa), std::abs(fb));
  auto consider = [&](double x, double fx) {
    if (std::abs(fx) < best_f) {
      best_f = std::abs(fx);
      best_x = x;
    }
  };

  int iter = 0;
  while (b - a > config.abs_tol_omega) {
    if (iter++ >= config.max_iter)
      throw SolverError("root refinement did not converge within max_iter");
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;  // bracket at floating-point resolution
    const double fm = f(m);
    consider(m, fm);
    if (fm == 0.0) {
      a = b = m;
      break;
    }
    if ((fa < 0.0) != (fm < 0.0)) {
      b = m;
      fb = fm;
    } else {
      a = m;
      fa = fm;
    }
  }

  // secant polish inside the final bracket
  double x0 = a, f0 = fa, x1 = b, f1 = fb;
  for (int k = 0; k < 12 && f1 != f0; ++k) {
    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    if (!(x2 > a - config.abs_tol_omega && x2 < b + config.abs_tol_omega)) break;
    const double f2 = f(x2);
    consider(x2, f2);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = f2;
    if (f2 == 0.0) break;
  }

  ZeroRecord rec;
  rec.omega_zero = best_x;
  rec.residual = best_f;
  return rec;
}

//! All roots inside one search window; pre-scan detects sign changes.
template <typename F>
std::vector<ZeroRecord> solve_window(F &&f, const Interval &iv,
                                     const SolverConfig &config) {
  std::vector<ZeroRecord> roots;
  const int k = config.scan_points_per_gap;
  double x_prev = iv.lo;
  double f_prev = f(x_prev);
  for (int i = 1; i <= k; ++i) {
    const double x = iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) / k;
    const double fx = f(x);
    if (f_prev == 0.0) {
      ZeroRecord r;
      r.omega_zero = x_prev;
      r.residual = 0.0;
      roots.push_back(r);
    } else if ((f_prev < 0.0) != (fx < 0.0)) {
      roots.push_back(refine_root(f, x_prev, x, f_prev, fx, config));
    }
    x_prev = x;
    f_prev = fx;
  }
  for (auto &r : roots) {
    r.bracket_lo = iv.pole_lo;
    r.bracket_hi = iv.pole_hi;
    r.ref_n = iv.ref_n;
    r.offset = r.omega_zero - iv.pole_hi;
  }
  return roots;
}

//! Gap intervals of `system` intersecting the range, including the interval
//! below the first pole.
std::vector<Interval> gap_intervals(const AtomicSystem &system,
                                    std::pair<double, double> range,
                                    const SolverConfig &config) {
  const auto &poles = system.poles();
  if (poles.empty()) throw ValidationError("system has no levels");
  const auto [wmin, wmax] = range;
  if (!(wmin < wmax)) throw ValidationError("range must have min < max");
  if (wmin < 0.0) throw ValidationError("range must be non-negative");
  if (wmax >= poles.back().omega)
    throw ValidationError("range upper end must lie below the highest loaded pole");

  std::vector<Interval> out;
  for (std::size_t p = 0; p < poles.size(); ++p) {
    Interval iv;
    iv.pole_lo = p == 0 ? 0.0 : poles[p - 1].omega;
    iv.pole_hi = poles[p].omega;
    iv.ref_n = system.pole_multiplet(static_cast<int>(p));
    const double width = iv.pole_hi - iv.pole_lo;
    const double margin = width * config.bracket_margin_frac;
    const double glo = iv.pole_lo + (p == 0 ? 0.0 : margin);
    const double ghi = iv.pole_hi - margin;
    iv.lo = std::max(glo, wmin);
    iv.hi = std::min(ghi, wmax);
    if (iv.lo >= iv.hi) continue;
    iv.full_gap = iv.lo == glo && iv.hi == ghi;
    out.push_back(iv);
  }
  return out;
}

void append_width_warning(const AtomicSystem &system, const ZeroRecord &rec,
                          std::vector<std::string> *warnings) {
  if (!warnings) return;
  for (int i : system.multiplet(rec.ref_n)) {
    const auto &lev = system.levels()[i];
    if (lev.gamma && rec.offset != 0.0 &&
        *lev.gamma / std::abs(rec.offset) >= 0.01)
      warnings->push_back("zero at " + std::to_string(rec.omega_zero) +
                          " cm^-1: natural width of " + lev.key.label() +
                          " is not negligible against the offset");
  }
}

std::vector<ZeroRecord> find_in_system(const AtomicSystem &system,
                                       std::pair<double, double> range,
                                       const SolverConfig &config,
                                       std::vector<std::string> *warnings,
                                       ZeroMethod method) {
  config.validate();
  auto f = [&system](double w) { return detail::a_zz_raw(system, w); };
  std::vector<ZeroRecord> all;
  for (const auto &iv : gap_intervals(system, range, config)) {
    auto roots = solve_window(f, iv, config);
    if (roots.empty() && iv.full_gap && iv.pole_lo > 0.0)
      throw SolverError(
          "no sign change of A_zz between the poles at " +
          std::to_string(iv.pole_lo) + " and " + std::to_string(iv.pole_hi) +
          " cm^-1 where one is guaranteed; probable data corruption");
    if (roots.size() > 1 && warnings)
      warnings->push_back("gap (" + std::to_string(iv.pole_lo) + ", " +
                          std::to_string(iv.pole_hi) + ") contains " +
                          std::to_string(roots.size()) +
                          " roots; expected one for physical data");
    for (auto &r : roots) {
      r.method = method;
      append_width_warning(system, r, warnings);
      all.push_back(r);
    }
  }
  std::sort(all.begin(), all.end(), [](const ZeroRecord &a, const ZeroRecord &b) {
    return a.omega_zero < b.omega_zero;
  });
  return all;
}

}  // namespace

std::vector<ZeroRecord> find_zeros(const AtomicSystem &system,
                                   std::pair<double, double> range,
                                   const SolverConfig &config,
                                   std::vector<std::string> *warnings) {
  return find_in_system(system, range, config, warnings, ZeroMethod::Numerical);
}

std::vector<ZeroRecord>
find_zeros_resonance_only(const AtomicSystem &system,
                          std::pair<double, double> range,
                          const SolverConfig &config,
                          std::vector<std::string> *warnings) {
  config.validate();
  const int resonance_n = system.pole_multiplet(0);
  std::vector<ZeroRecord> all;
  for (const auto &iv : gap_intervals(system, range, config)) {
    const auto truncated = system.restricted_to({resonance_n, iv.ref_n});
    // the corresponding gap in the truncated system ends at the same pole
    const auto &tp = truncated.poles();
    int hi = -1;
    for (int p = 0; p < static_cast<int>(tp.size()); ++p)
      if (std::abs(tp[p].omega - iv.pole_hi) < constants::pole_merge_eps_cm1) hi = p;
    if (hi < 0) continue;  // reference pole merged away; nothing to solve
    Interval tv;
    tv.pole_lo = hi == 0 ? 0.0 : tp[hi - 1].omega;
    tv.pole_hi = tp[hi].omega;
    tv.ref_n = iv.ref_n;
    const double margin = (tv.pole_hi - tv.pole_lo) * config.bracket_margin_frac;
    tv.lo = tv.pole_lo + (hi == 0 ? 0.0 : margin);
    tv.hi = tv.pole_hi - margin;
    tv.full_gap = true;
    auto f = [&truncated](double w) { return detail::a_zz_raw(truncated, w); };
    auto roots = solve_window(f, tv, config);
    if (roots.empty() && tv.pole_lo > 0.0)
      throw SolverError("no sign change in the truncated system below the pole at " +
                        std::to_string(tv.pole_hi) + " cm^-1");
    if (roots.size() > 1 && warnings)
      warnings->push_back("truncated gap below " + std::to_string(tv.pole_hi) +
                          " contains " + std::to_string(roots.size()) + " roots");
    for (auto &r : roots) {
      r.method = ZeroMethod::NumericalResonanceOnly;
      append_width_warning(truncated, r, warnings);
      all.push_back(r);
    }
  }
  std::sort(all.begin(), all.end(), [](const ZeroRecord &a, const ZeroRecord &b) {
    return a.omega_zero < b.omega_zero;
  });
  return all;
}

ZeroRecord approx_zero(const AtomicSystem &system, int n,
                       int fixed_point_iters) {
  if (!system.has_multiplet(n))
    throw ValidationError("multiplet n=" + std::to_string(n) + " absent");
  const double omega_n = system.multiplet_omega(n);
  const double strength = system.multiplet_strength(n);
  const double p = p_zz(system, omega_n, n, GuardPolicy{});
  if (p == 0.0 || !std::isfinite(strength / p))
    throw SolverError("remote-level sum vanishes at the multiplet frequency; "
                      "the leading-order zero estimate is undefined");
  ZeroRecord rec;
  rec.method = ZeroMethod::ApproxAnalytic;
  rec.ref_n = n;
  rec.offset = strength / p;
  for (int k = 0; k < fixed_point_iters; ++k)
    rec.offset = strength / p_zz(system, omega_n + rec.offset, n, GuardPolicy{});
  rec.omega_zero = omega_n + rec.offset;
  rec.residual = std::abs(detail::a_zz_raw(system, rec.omega_zero));
  const auto &poles = system.poles();
  for (std::size_t i = 0; i <= poles.size(); ++i) {
    const double lo = i == 0 ? 0.0 : poles[i - 1].omega;
    const double hi = i < poles.size() ? poles[i].omega
                                       : std::numeric_limits<double>::infinity();
    if (rec.omega_zero > lo && rec.omega_zero <= hi) {
      rec.bracket_lo = lo;
      rec.bracket_hi = hi;
      break;
    }
  }
  return rec;
}

ZeroRecord find_zero_in_gap(const AtomicSystem &system, int lo_pole,
                            int hi_pole, const SolverConfig &config) {
  config.validate();
  const auto &poles = system.poles();
  if (hi_pole < 0 || hi_pole >= static_cast<int>(poles.size()) ||
      lo_pole != hi_pole - 1)
    throw ValidationError("find_zero_in_gap requires an adjacent pole pair");
  Interval iv;
  iv.pole_lo = lo_pole >= 0 ? poles[lo_pole].omega : 0.0;
  iv.pole_hi = poles[hi_pole].omega;
  iv.ref_n = system.pole_multiplet(hi_pole);
  const double margin = (iv.pole_hi - iv.pole_lo) * config.bracket_margin_frac;
  iv.lo = iv.pole_lo + (lo_pole >= 0 ? margin : 0.0);
  iv.hi = iv.pole_hi - margin;
  iv.full_gap = true;
  auto f = [&system](double w) { return detail::a_zz_raw(system, w); };
  auto roots = solve_window(f, iv, config);
  if (roots.empty())
    throw SolverError("no zero of A_zz in the gap (" +
                      std::to_string(iv.pole_lo) + ", " +
                      std::to_string(iv.pole_hi) + ") cm^-1");
  for (auto &r : roots) r.method = ZeroMethod::Numerical;
  return roots.front();
}

}  // namespace rayzero
