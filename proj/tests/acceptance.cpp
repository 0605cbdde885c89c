// Acceptance suite: end-to-end checks of the bundled datasets and the
// numerical contracts, one pass/fail line per criterion.  Returns the
// number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rayzero/amplitude.hpp"
#include "rayzero/cli.hpp"
#include "rayzero/inversion.hpp"
#include "rayzero/zeros.hpp"
#include "support.hpp"

using namespace rayzero;

namespace {

const std::string kLiPath = std::string(RAYZERO_DATA_DIR) + "/li.dat";
const std::string kCsPath = std::string(RAYZERO_DATA_DIR) + "/cs.dat";

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << (detail.str().empty() ? "" : "; ") << "FAILED: " << what;
    }
  }
  void note(const std::string &text) {
    detail << (detail.str().empty() ? "" : "; ") << text;
  }
};

double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// ---------------------------------------------------------------------------
// 1. Li zero table via cmd_zeros: offsets within 5% of the reference
//    (-38.37, -33.10, -25.24, -16.70), |Numerical - ApproxAnalytic| <= 0.10,
//    |Numerical - resonance-only| <= 0.50, runtime < 5 s.
Check criterion_li_table(double &seconds) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();

  cli::ZerosOptions opt;
  opt.common.dataset = kLiPath;
  opt.multiplets = {{3, 6}};
  opt.methods = {ZeroMethod::Numerical, ZeroMethod::NumericalResonanceOnly,
                 ZeroMethod::ApproxAnalytic};
  std::ostringstream out, err;
  const int code = cli::run_zeros(opt, out, err);
  c.require(code == 0, "cmd_zeros exit code " + std::to_string(code));

  std::map<std::pair<std::string, int>, double> offset;
  std::istringstream csv(out.str());
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    std::istringstream row(line);
    std::string method, ref_n, omega_zero, off;
    std::getline(row, method, ',');
    std::getline(row, ref_n, ',');
    std::getline(row, omega_zero, ',');
    std::getline(row, off, ',');
    offset[{method, std::stoi(ref_n)}] = std::stod(off);
  }

  const std::map<int, double> reference = {
      {3, -38.37}, {4, -33.10}, {5, -25.24}, {6, -16.70}};
  for (const auto &[n, ref] : reference) {
    const double num = offset.at({"Numerical", n});
    const double res = offset.at({"NumericalResonanceOnly", n});
    const double apx = offset.at({"ApproxAnalytic", n});
    char buf[160];
    std::snprintf(buf, sizeof buf, "n=%d num=%.3f (ref %.2f) res=%.3f apx=%.3f",
                  n, num, ref, res, apx);
    c.note(buf);
    c.require(std::abs(num - ref) <= 0.05 * std::abs(ref),
              "numerical offset outside 5% for n=" + std::to_string(n));
    c.require(std::abs(num - apx) <= 0.10,
              "|numerical - approx| > 0.10 cm^-1 for n=" + std::to_string(n));
    c.require(std::abs(num - res) <= 0.50,
              "|numerical - resonance-only| > 0.50 cm^-1 for n=" + std::to_string(n));
  }

  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(seconds < 5.0, "runtime exceeded 5 s");
  return c;
}

// ---------------------------------------------------------------------------
// 2. Cs zeros at -43.25 and -195.2 cm^-1 from 7p_3/2 within 5%; P_L = -1.0
//    at the roots to 1e-6; runtime < 5 s.
Check criterion_cs_zeros(double &seconds) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();

  const auto cs = load_system(kCsPath);
  double w73 = 0.0;
  for (const auto &lev : cs.levels())
    if (lev.key == LevelKey{7, 1, 3}) w73 = lev.omega;
  const auto roots = find_zeros(cs, {w73 - 250.0, w73 + 20.0});
  c.require(roots.size() == 2, "expected two zeros near the 7p doublet, got " +
                                   std::to_string(roots.size()));
  if (roots.size() == 2) {
    const double off_low = roots[0].omega_zero - w73;
    const double off_high = roots[1].omega_zero - w73;
    char buf[120];
    std::snprintf(buf, sizeof buf, "offsets %.3f and %.3f cm^-1", off_high, off_low);
    c.note(buf);
    c.require(std::abs(off_high - (-43.25)) <= 0.05 * 43.25,
              "upper zero outside 5% of -43.25");
    c.require(std::abs(off_low - (-195.2)) <= 0.05 * 195.2,
              "lower zero outside 5% of -195.2");
    for (const auto &r : roots) {
      const double pl = depolarization(cs, r.omega_zero);
      c.require(std::abs(pl + 1.0) <= 1e-6,
                "P_L at the root differs from -1 by " + std::to_string(pl + 1.0));
    }
  }

  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(seconds < 5.0, "runtime exceeded 5 s");
  return c;
}

// ---------------------------------------------------------------------------
// 3. Oracle equivalence on 100 randomized systems (2-10 levels), 100 random
//    frequencies each, to 1e-13 relative; runtime < 30 s.
Check criterion_oracle(double &seconds) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();

  std::mt19937_64 rng(20240811);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto sys = testsupport::random_system(rng);
    const double top = sys.poles().back().omega;
    const auto ns = sys.multiplet_ns();
    for (int k = 0; k < 100; ++k) {
      const double w = testsupport::random_omega(rng, sys, 1.0, 1.1 * top, 0.5);
      const long double scale = testsupport::term_scale(sys, w);
      worst = std::max(worst,
                       testsupport::conditioned_dev(
                           p_zz(sys, w), testsupport::p_zz_direct(sys, w), scale));
      worst = std::max(worst,
                       testsupport::conditioned_dev(
                           q_xz(sys, w), testsupport::q_xz_direct(sys, w), scale));
      const int excl = ns[k % ns.size()];
      worst = std::max(worst, testsupport::conditioned_dev(
                                  p_zz(sys, w, excl),
                                  testsupport::p_zz_direct(sys, w, excl), scale));
      worst = std::max(worst, testsupport::conditioned_dev(
                                  amplitude(sys, w, Polarization::ZZ),
                                  testsupport::a_zz_direct(sys, w), scale / 9.0L));
      worst = std::max(worst, testsupport::conditioned_dev(
                                  amplitude(sys, w, Polarization::XZ),
                                  testsupport::a_xz_direct(sys, w), scale / 9.0L));
      const long double w4 = static_cast<long double>(w) * w * w * w;
      worst = std::max(
          worst, testsupport::conditioned_dev(
                     cross_section(sys, w, Polarization::ZZ),
                     testsupport::cross_section_direct(sys, w, Polarization::ZZ),
                     w4 * (scale / 9.0L) * (scale / 9.0L)));
    }
  }
  char buf[80];
  std::snprintf(buf, sizeof buf, "max conditioned relative deviation %.3e", worst);
  c.note(buf);
  c.require(worst < 1e-13, "oracle deviation exceeds 1e-13");

  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(seconds < 30.0, "runtime exceeded 30 s");
  return c;
}

// ---------------------------------------------------------------------------
// 4. Interleaving: exactly one root per inter-pole gap with verified sign
//    change and residual local-minimality; two-level systems match the
//    closed-form root to 1e-10.
Check criterion_interleaving(double &seconds) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();

  std::mt19937_64 rng(20240811);
  SolverConfig config;
  for (int i = 0; i < 100; ++i) {
    const auto sys = testsupport::random_system(rng);
    const auto &poles = sys.poles();
    std::vector<std::string> warnings;
    const auto roots =
        find_zeros(sys, {1.0, poles.back().omega - 1e-9}, config, &warnings);
    c.require(roots.size() == poles.size() - 1,
              "root count != gap count on system " + std::to_string(i));
    c.require(warnings.empty(), "unexpected multi-root warning");
    for (std::size_t g = 0; g < roots.size() && g + 1 < poles.size(); ++g) {
      const auto &r = roots[g];
      c.require(r.omega_zero > poles[g].omega && r.omega_zero < poles[g + 1].omega,
                "root outside its gap");
      const double eps = 10.0 * config.abs_tol_omega;
      const double left = detail::a_zz_raw(sys, r.omega_zero - eps);
      const double right = detail::a_zz_raw(sys, r.omega_zero + eps);
      c.require(left * right < 0.0, "no sign change across the root");
      c.require(r.residual < std::abs(left) && r.residual < std::abs(right),
                "residual is not locally minimal");
    }
  }

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double w1 = 2000.0 + 20000.0 * u01(rng);
    const double w2 = w1 + 500.0 + 15000.0 * u01(rng);
    const double m1 = std::exp(std::log(0.05) + 6.0 * u01(rng));
    const double m2 = std::exp(std::log(0.05) + 6.0 * u01(rng));
    AtomicSystem sys("toy", LevelKey{2, 0, 1},
                     {ExcitedLevel{LevelKey{3, 1, 3}, w1, m1, 0.1, {}},
                      ExcitedLevel{LevelKey{4, 1, 1}, w2, m2, 0.1, {}}});
    const auto roots = find_zeros(sys, {1.0, w2 - 1e-6}, config);
    c.require(roots.size() == 1, "two-level system must have one zero");
    if (roots.size() == 1) {
      const double exact = testsupport::two_pole_zero(w1, 2.0 * m1, w2, m2);
      worst = std::max(worst, rel_err(roots[0].omega_zero, exact));
    }
  }
  char buf[80];
  std::snprintf(buf, sizeof buf, "closed-form max deviation %.3e", worst);
  c.note(buf);
  c.require(worst < 1e-10, "closed-form deviation exceeds 1e-10");

  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

// ---------------------------------------------------------------------------
// 5. Round-trip inversion: noiseless Li 3p and Cs 7p_j problems recovered to
//    1e-9 relative; 500 Monte-Carlo repeats at 0.01 cm^-1 noise give an
//    empirical spread within 20% of the reported statistical covariance;
//    runtime < 2 min.
Check criterion_roundtrip(double &seconds) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  SolverConfig config;

  // Li: tied 3p multiplet from the zero below 3p
  {
    const auto base = load_system(kLiPath);
    const auto truth = base.with_scaled_multiplets({3}, 1.23);
    InversionProblem problem{base, {UnknownGroup{3, {}}}, {2}, {}};
    MeasuredZero m;
    m.bracket = parse_gap_hint("2,3/2:3");
    m.sigma_omega = 0.01;
    problem.measurements = {m};
    problem.measurements[0].omega_zero =
        forward_zeros(truth, problem.measurements, config)[0];
    const auto result = solve(problem, config);
    const double dev = std::abs(result.estimates[0].scale / 1.23 - 1.0);
    char buf[80];
    std::snprintf(buf, sizeof buf, "Li 3p recovery deviation %.2e", dev);
    c.note(buf);
    c.require(dev < 1e-9, "Li 3p not recovered to 1e-9");
  }

  // Cs: both 7p components from the two zeros
  const auto base = load_system(kCsPath);
  InversionProblem problem{base, {UnknownGroup{7, 1}, UnknownGroup{7, 3}}, {6}, {}};
  {
    std::vector<std::pair<LevelKey, double>> assign;
    for (const auto &lev : base.levels()) {
      if (lev.key == LevelKey{7, 1, 1}) assign.emplace_back(lev.key, lev.m_sq * 1.12);
      if (lev.key == LevelKey{7, 1, 3}) assign.emplace_back(lev.key, lev.m_sq * 0.93);
    }
    const auto truth = base.with_m_sq(assign);
    MeasuredZero m1, m2;
    m1.bracket = parse_gap_hint("7,1/2:7,3/2");
    m2.bracket = parse_gap_hint("6,3/2:7,1/2");
    m1.sigma_omega = m2.sigma_omega = 0.01;
    problem.measurements = {m1, m2};
    const auto zeros = forward_zeros(truth, problem.measurements, config);
    problem.measurements[0].omega_zero = zeros[0];
    problem.measurements[1].omega_zero = zeros[1];
    const auto result = solve(problem, config);
    const double d1 = std::abs(result.estimates[0].scale / 1.12 - 1.0);
    const double d2 = std::abs(result.estimates[1].scale / 0.93 - 1.0);
    char buf[100];
    std::snprintf(buf, sizeof buf, "Cs 7p recovery deviations %.2e / %.2e", d1, d2);
    c.note(buf);
    c.require(d1 < 1e-9 && d2 < 1e-9, "Cs 7p_j not recovered to 1e-9");
  }

  // Monte-Carlo calibration of the reported covariance (truth = dataset)
  {
    std::vector<MeasuredZero> ms(2);
    ms[0].bracket = parse_gap_hint("7,1/2:7,3/2");
    ms[1].bracket = parse_gap_hint("6,3/2:7,1/2");
    ms[0].sigma_omega = ms[1].sigma_omega = 0.01;
    const auto clean = forward_zeros(base, ms, config);

    InversionProblem mc = problem;
    mc.measurements = ms;
    mc.measurements[0].omega_zero = clean[0];
    mc.measurements[1].omega_zero = clean[1];
    const auto nominal = solve(mc, config);

    testsupport::Gauss gauss(987654321);
    const int repeats = 500;
    std::vector<double> sum(2, 0.0), sum_sq(2, 0.0);
    for (int rep = 0; rep < repeats; ++rep) {
      InversionProblem noisy = mc;
      noisy.measurements[0].omega_zero = clean[0] + 0.01 * gauss();
      noisy.measurements[1].omega_zero = clean[1] + 0.01 * gauss();
      const auto res = solve(noisy, config);
      for (int g = 0; g < 2; ++g) {
        const double v = res.estimates[g].m_sq.front().second;
        sum[g] += v;
        sum_sq[g] += v * v;
      }
    }
    for (int g = 0; g < 2; ++g) {
      const double mean = sum[g] / repeats;
      const double emp_std =
          std::sqrt((sum_sq[g] - repeats * mean * mean) / (repeats - 1));
      const double reported =
          std::sqrt(nominal.covariance(g == 0 ? 0 : 1, g == 0 ? 0 : 1));
      const double ratio = emp_std / reported;
      char buf[120];
      std::snprintf(buf, sizeof buf, "MC/reported sigma ratio[%s] = %.3f",
                    nominal.estimates[g].group.label().c_str(), ratio);
      c.note(buf);
      c.require(std::abs(ratio - 1.0) <= 0.20,
                "empirical spread disagrees with reported covariance by >20%");
    }
  }

  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(seconds < 120.0, "runtime exceeded 2 min");
  return c;
}

// ---------------------------------------------------------------------------
// 6. Remote-level sensitivity on the Li problem: +/-10% on everything beyond
//    the fiducial 2p (4p..8p strengths plus the tail) shifts the fitted 3p
//    strength by < 2e-3 relative; the actual figure is printed.
Check criterion_li_sensitivity(double &seconds) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();

  const auto base = load_system(kLiPath);
  InversionProblem problem{base, {UnknownGroup{3, {}}}, {2}, {}};
  MeasuredZero m;
  m.bracket = parse_gap_hint("2,3/2:3");
  m.sigma_omega = 0.01;
  problem.measurements = {m};
  problem.measurements[0].omega_zero = forward_zeros(base, problem.measurements)[0];

  const auto result = solve(problem);
  const auto shifts = tail_sensitivity(problem, result, 0.10);
  char buf[120];
  std::snprintf(buf, sizeof buf,
                "fitted 3p shift under +/-10%% remote perturbation: %.4e", shifts[0]);
  c.note(buf);
  c.require(shifts[0] < 2e-3, "3p shift exceeds 2e-3");

  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

// ---------------------------------------------------------------------------
// 7. Polarizability consistency: the alpha_ref-based tail reproduces the
//    reference by construction and the resonance multiplet carries >= 95%.
Check criterion_polarizability(double &seconds) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();

  const double alpha_ref = 164.1, alpha_unc = 0.5;
  const auto li = load_system(kLiPath);
  const auto tail = truncation_bound(li, alpha_ref, alpha_unc);
  const auto with = li.with_tail(tail);
  const double total = dynamic_polarizability(with, 0.0);
  const double partial_2p =
      dynamic_polarizability(li.restricted_to({2}), 0.0);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "alpha(0)=%.4f a.u. (tail %.4f), 2p share %.4f", total,
                tail.p_zz / 9.0 * constants::hartree_cm1, partial_2p / alpha_ref);
  c.note(buf);
  c.require(rel_err(total, alpha_ref) < 1e-12, "alpha(0)+tail != alpha_ref");
  c.require(partial_2p / alpha_ref >= 0.95, "2p share below 95%");

  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

// ---------------------------------------------------------------------------
// 8. Representation independence and parity to 1e-12 on randomized systems,
//    < 10 s.
Check criterion_invariants(double &seconds) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();

  std::mt19937_64 rng(777);
  double worst_rep = 0.0, worst_par = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto sys = testsupport::random_system(rng);
    const double top = sys.poles().back().omega;
    const auto ns = sys.multiplet_ns();
    for (int k = 0; k < 20; ++k) {
      const double w = testsupport::random_omega(rng, sys, 1.0, 1.2 * top, 1.0);
      for (auto pol : {Polarization::ZZ, Polarization::XZ}) {
        const double ref = amplitude_split(sys, w, pol, ns.front(), GuardPolicy{0.5});
        for (int n : ns)
          worst_rep = std::max(
              worst_rep,
              rel_err(ref, amplitude_split(sys, w, pol, n, GuardPolicy{0.5})));
      }
      worst_par = std::max(worst_par, rel_err(detail::a_zz_raw(sys, -w),
                                              detail::a_zz_raw(sys, w)));
      worst_par = std::max(worst_par, rel_err(detail::a_xz_raw(sys, -w),
                                              -detail::a_xz_raw(sys, w)));
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "worst representation dev %.3e, parity dev %.3e",
                worst_rep, worst_par);
  c.note(buf);
  c.require(worst_rep < 1e-12, "representation independence above 1e-12");
  c.require(worst_par < 1e-12, "parity above 1e-12");

  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(seconds < 10.0, "runtime exceeded 10 s");
  return c;
}

}  // namespace

int main() {
  struct Entry {
    const char *name;
    Check (*fn)(double &);
  };
  const Entry entries[] = {
      {"1. Li zero table (numerical within 5%, column spreads)", criterion_li_table},
      {"2. Cs zeros at -43.25/-195.2 cm^-1, P_L = -1 at roots", criterion_cs_zeros},
      {"3. brute-force oracle equivalence to 1e-13", criterion_oracle},
      {"4. interleaving + closed-form two-level roots", criterion_interleaving},
      {"5. round-trip inversion + Monte-Carlo covariance", criterion_roundtrip},
      {"6. Li remote-level sensitivity < 2e-3", criterion_li_sensitivity},
      {"7. polarizability consistency and 2p dominance", criterion_polarizability},
      {"8. representation independence and parity", criterion_invariants},
  };

  int failures = 0;
  for (const auto &entry : entries) {
    double seconds = 0.0;
    Check c;
    try {
      c = entry.fn(seconds);
    } catch (const std::exception &e) {
      c.pass = false;
      c.note(std::string("exception: ") + e.what());
    }
    if (!c.pass) ++failures;
    std::printf("[%s] %s (%.2f s)%s%s\n", c.pass ? "PASS" : "FAIL", entry.name,
                seconds, c.detail.str().empty() ? "" : " -- ",
                c.detail.str().c_str());
  }
  if (failures)
    std::printf("%d criterion(s) FAILED\n", failures);
  else
    std::printf("all 8 acceptance criteria passed\n");
  return failures;
}
