#include "rayzero/amplitude.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "rayzero/constants.hpp"

namespace rayzero {

namespace {

//! Kahan compensated accumulator; the level sums cancel strongly near the
//! amplitude zeros and plain summation would not hold 1e-13 against the
//! brute-force oracle there.
class KahanSum {
public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

private:
  double s_ = 0.0;
  double c_ = 0.0;
};

double zz_weight(int twice_j) { return twice_j == 3 ? 2.0 : 1.0; }
double xz_sign(int twice_j) { return twice_j == 3 ? 1.0 : -1.0; }

//! Remote-level sum over resonant and anti-resonant terms, optionally
//! skipping one multiplet.
double level_sum(const AtomicSystem &system, double omega, Polarization pol,
                 std::optional<int> exclude_n, bool with_tail) {
  KahanSum sum;
  for (const auto &lev : system.levels()) {
    if (exclude_n && lev.key.n == *exclude_n) continue;
    const double res = 1.0 / (lev.omega - omega);
    const double anti = 1.0 / (lev.omega + omega);
    if (pol == Polarization::ZZ) {
      const double w = zz_weight(lev.key.twice_j) * lev.m_sq;
      sum.add(w * res);
      sum.add(w * anti);
    } else {
      const double w = xz_sign(lev.key.twice_j) * lev.m_sq;
      sum.add(w * res);
      sum.add(-w * anti);
    }
  }
  if (with_tail && system.tail())
    sum.add(pol == Polarization::ZZ ? system.tail()->p_zz : system.tail()->q_xz);
  return sum.value();
}

//! Near-multiplet terms of the split form, written with (omega - omega_nj)
//! denominators; they enter the amplitude with the opposite sign to the
//! remote-level sums.
double near_multiplet(const AtomicSystem &system, int n, double omega,
                      Polarization pol) {
  KahanSum sum;
  for (int i : system.multiplet(n)) {
    const auto &lev = system.levels()[i];
    const double det = omega - lev.omega;        // Delta_n (+ Delta_fs)
    const double det_anti = det - 2.0 * omega;   // Delta_n (...) - 2 omega
    if (pol == Polarization::ZZ) {
      const double w = zz_weight(lev.key.twice_j) * lev.m_sq;
      sum.add(w / det);
      sum.add(w / det_anti);
    } else {
      const double w = xz_sign(lev.key.twice_j) * lev.m_sq;
      sum.add(w / det);
      sum.add(-w / det_anti);
    }
  }
  return sum.value();
}

int nearest_multiplet(const AtomicSystem &system, double omega) {
  const auto ns = system.multiplet_ns();
  int best = ns.front();
  double dist = std::numeric_limits<double>::infinity();
  for (int n : ns) {
    const double d = std::abs(system.multiplet_omega(n) - omega);
    if (d < dist) {
      dist = d;
      best = n;
    }
  }
  return best;
}

}  // namespace

namespace detail {

void check_guard(const AtomicSystem &system, double omega,
                 const GuardPolicy &guard, std::optional<int> exclude_n) {
  if (!(guard.guard_band > 0.0))
    throw ValidationError("guard band must be positive");
  for (const auto &pole : system.poles()) {
    if (exclude_n && system.levels()[pole.level_index.front()].key.n == *exclude_n)
      continue;
    if (std::abs(pole.omega - omega) < guard.guard_band)
      throw GuardBandError(
          "omega = " + std::to_string(omega) + " cm^-1 is within the " +
              std::to_string(guard.guard_band) + " cm^-1 guard band of the pole at " +
              std::to_string(pole.omega) + " cm^-1",
          pole.omega);
  }
}

double a_zz_raw(const AtomicSystem &system, double omega) {
  return level_sum(system, omega, Polarization::ZZ, std::nullopt, true) / 9.0;
}

double a_xz_raw(const AtomicSystem &system, double omega) {
  return level_sum(system, omega, Polarization::XZ, std::nullopt, true) / 9.0;
}

}  // namespace detail

double p_zz(const AtomicSystem &system, double omega,
            std::optional<int> exclude_n, const GuardPolicy &guard) {
  if (omega < 0.0) throw ValidationError("omega must be >= 0");
  detail::check_guard(system, omega, guard, exclude_n);
  return level_sum(system, omega, Polarization::ZZ, exclude_n, true);
}

double q_xz(const AtomicSystem &system, double omega,
            std::optional<int> exclude_n, const GuardPolicy &guard) {
  if (omega < 0.0) throw ValidationError("omega must be >= 0");
  detail::check_guard(system, omega, guard, exclude_n);
  return level_sum(system, omega, Polarization::XZ, exclude_n, true);
}

double amplitude_split(const AtomicSystem &system, double omega,
                       Polarization pol, int ref_n, const GuardPolicy &guard) {
  if (omega < 0.0) throw ValidationError("omega must be >= 0");
  if (!system.has_multiplet(ref_n))
    throw ValidationError("reference multiplet n=" + std::to_string(ref_n) + " absent");
  detail::check_guard(system, omega, guard);
  const double near = near_multiplet(system, ref_n, omega, pol);
  const double remote = level_sum(system, omega, pol, ref_n, true);
  return -(near - remote) / 9.0;
}

double amplitude(const AtomicSystem &system, double omega, Polarization pol,
                 const GuardPolicy &guard) {
  if (system.levels().empty()) {
    if (system.tail())
      return (pol == Polarization::ZZ ? system.tail()->p_zz : system.tail()->q_xz) / 9.0;
    return 0.0;
  }
  return amplitude_split(system, omega, pol, nearest_multiplet(system, omega), guard);
}

double cross_section(const AtomicSystem &system, double omega,
                     Polarization pol, const GuardPolicy &guard) {
  if (!(omega > 0.0)) throw ValidationError("omega must be positive");
  const double a = amplitude(system, omega, pol, guard);
  const double w2 = omega * omega;
  return k_cross_section * w2 * w2 * a * a;
}

double depolarization(const AtomicSystem &system, double omega,
                      const GuardPolicy &guard) {
  const double szz = cross_section(system, omega, Polarization::ZZ, guard);
  const double sxz = cross_section(system, omega, Polarization::XZ, guard);
  if (szz + sxz == 0.0)
    throw ValidationError("P_L undefined: both intensities vanish at omega = " +
                          std::to_string(omega));
  return (szz - sxz) / (szz + sxz);
}

ScanResult scan_spectrum(const AtomicSystem &system,
                         std::span<const double> grid,
                         const GuardPolicy &guard, int threads) {
  ScanResult result;
  std::vector<double> accepted;
  for (double w : grid) {
    bool ok = w > 0.0;
    if (ok) {
      try {
        detail::check_guard(system, w, guard);
      } catch (const GuardBandError &) {
        ok = false;
      }
    }
    (ok ? accepted : result.skipped).push_back(w);
  }
  if (accepted.empty())
    throw ValidationError("no grid point passes the guard band");

  result.points.resize(accepted.size());
  auto eval = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double w = accepted[i];
      SpectrumPoint pt;
      pt.omega = w;
      pt.a_zz = amplitude(system, w, Polarization::ZZ, guard);
      pt.a_xz = amplitude(system, w, Polarization::XZ, guard);
      const double w4 = w * w * w * w;
      pt.sigma_zz = k_cross_section * w4 * pt.a_zz * pt.a_zz;
      pt.sigma_xz = k_cross_section * w4 * pt.a_xz * pt.a_xz;
      const double tot = pt.sigma_zz + pt.sigma_xz;
      pt.p_l = tot > 0.0 ? (pt.sigma_zz - pt.sigma_xz) / tot : 0.0;
      result.points[i] = pt;
    }
  };

  const int nthreads = std::max(1, threads);
  if (nthreads == 1 || accepted.size() < 64) {
    eval(0, accepted.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (accepted.size() + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(accepted.size(), b + chunk);
      if (b < e) pool.emplace_back(eval, b, e);
    }
    for (auto &th : pool) th.join();
  }
  return result;
}

double dynamic_polarizability(const AtomicSystem &system, double omega,
                              const GuardPolicy &guard) {
  if (omega < 0.0) throw ValidationError("omega must be >= 0");
  if (system.levels().empty() && !system.tail()) return 0.0;
  if (!system.levels().empty()) detail::check_guard(system, omega, guard);
  return detail::a_zz_raw(system, omega) * constants::hartree_cm1;
}

}  // namespace rayzero
