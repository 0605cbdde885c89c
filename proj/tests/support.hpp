#pragma once
// Test-only helpers: brute-force reference implementations of the level
// sums (independent of the library's evaluation path: naive direct
// summation in long double, in storage order), a random-system generator,
// and a tiny deterministic Gaussian.
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rayzero/amplitude.hpp"
#include "rayzero/atomic_data.hpp"
#include "rayzero/constants.hpp"

namespace testsupport {

inline long double p_zz_direct(const rayzero::AtomicSystem &s, long double w,
                               std::optional<int> exclude_n = std::nullopt) {
  long double sum = 0.0L;
  for (const auto &lev : s.levels()) {
    if (exclude_n && lev.key.n == *exclude_n) continue;
    const long double weight = lev.key.twice_j == 3 ? 2.0L : 1.0L;
    const long double m = lev.m_sq;
    sum += weight * m / (static_cast<long double>(lev.omega) - w);
    sum += weight * m / (static_cast<long double>(lev.omega) + w);
  }
  if (s.tail()) sum += static_cast<long double>(s.tail()->p_zz);
  return sum;
}

inline long double q_xz_direct(const rayzero::AtomicSystem &s, long double w,
                               std::optional<int> exclude_n = std::nullopt) {
  long double sum = 0.0L;
  for (const auto &lev : s.levels()) {
    if (exclude_n && lev.key.n == *exclude_n) continue;
    const long double sign = lev.key.twice_j == 3 ? 1.0L : -1.0L;
    const long double m = lev.m_sq;
    sum += sign * m / (static_cast<long double>(lev.omega) - w);
    sum -= sign * m / (static_cast<long double>(lev.omega) + w);
  }
  if (s.tail()) sum += static_cast<long double>(s.tail()->q_xz);
  return sum;
}

inline long double a_zz_direct(const rayzero::AtomicSystem &s, long double w) {
  return p_zz_direct(s, w) / 9.0L;
}

inline long double a_xz_direct(const rayzero::AtomicSystem &s, long double w) {
  return q_xz_direct(s, w) / 9.0L;
}

inline long double cross_section_direct(const rayzero::AtomicSystem &s,
                                        long double w,
                                        rayzero::Polarization pol) {
  const long double a = pol == rayzero::Polarization::ZZ ? a_zz_direct(s, w)
                                                         : a_xz_direct(s, w);
  return w * w * w * w * a * a;
}

//! Static/dynamic polarizability through the oscillator-strength route:
//! alpha(w) = sum_j f_j / (w_j_au^2 - w_au^2), with the per-component
//! f-value written out from first principles.
inline double alpha_direct(const rayzero::AtomicSystem &s, double w) {
  const double h = rayzero::constants::hartree_cm1;
  long double sum = 0.0L;
  for (const auto &lev : s.levels()) {
    const long double u = lev.omega / h;
    const long double wj = lev.key.twice_j == 3 ? 2.0L / 3.0L : 1.0L / 3.0L;
    const long double f = (2.0L / 3.0L) * u * wj * lev.m_sq;
    sum += f / (u * u - static_cast<long double>(w / h) * (w / h));
  }
  if (s.tail()) sum += static_cast<long double>(s.tail()->p_zz) / 9.0L * h;
  return static_cast<double>(sum);
}

//! Sum of term magnitudes of the ZZ level sum: the natural magnitude scale
//! against which cancellation depth is measured.
inline long double term_scale(const rayzero::AtomicSystem &s, long double w) {
  long double sum = 0.0L;
  for (const auto &lev : s.levels()) {
    const long double weight = lev.key.twice_j == 3 ? 2.0L : 1.0L;
    const long double m = lev.m_sq;
    sum += std::abs(weight * m / (static_cast<long double>(lev.omega) - w));
    sum += std::abs(weight * m / (static_cast<long double>(lev.omega) + w));
  }
  if (s.tail()) sum += std::abs(static_cast<long double>(s.tail()->p_zz));
  return sum;
}

//! Deviation relative to max(|a|, |b|, floor): at the interference zeros the
//! sums cancel arbitrarily deeply and a pure relative metric is unbounded
//! for any finite-precision pair of routes, so the denominator is pinned at
//! 1% of the term-magnitude scale there (where both routes still agree to
//! ~1e-15 of that scale).
inline double conditioned_dev(double a, long double b, long double scale) {
  const long double denom = std::max(
      {std::abs(static_cast<long double>(a)), std::abs(b), 0.01L * scale});
  return denom == 0.0L
             ? 0.0
             : static_cast<double>(std::abs(static_cast<long double>(a) - b) / denom);
}

//! Exact root of the two-pole zero condition
//!   S1 2 w1/(w1^2 - w^2) + S2 2 w2/(w2^2 - w^2) = 0,
//! which lies between the poles: w0^2 = w1 w2 (S1 w2 + S2 w1)/(S1 w1 + S2 w2).
inline double two_pole_zero(double w1, double s1, double w2, double s2) {
  return std::sqrt(w1 * w2 * (s1 * w2 + s2 * w1) / (s1 * w1 + s2 * w2));
}

//! Random physical system: 2..10 levels grouped into multiplets with
//! positive strengths spanning a few orders of magnitude.
inline rayzero::AtomicSystem random_system(std::mt19937_64 &rng,
                                           int min_levels = 2,
                                           int max_levels = 10) {
  std::uniform_int_distribution<int> nlev_dist(min_levels, max_levels);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int nlevels = nlev_dist(rng);

  std::vector<rayzero::ExcitedLevel> levels;
  double omega = 500.0 + 19500.0 * u01(rng);
  int n = 2;
  while (static_cast<int>(levels.size()) < nlevels) {
    const bool pair =
        nlevels - static_cast<int>(levels.size()) >= 2 && u01(rng) < 0.5;
    auto make = [&](int twice_j, double w) {
      rayzero::ExcitedLevel lev;
      lev.key = rayzero::LevelKey{n, 1, twice_j};
      lev.omega = w;
      lev.m_sq = std::exp(std::log(0.05) + (std::log(20.0) - std::log(0.05)) * u01(rng));
      lev.m_sq_rel_unc = 0.1;
      return lev;
    };
    if (pair) {
      const double fs = 2.0 + 198.0 * u01(rng);
      levels.push_back(make(1, omega));
      levels.push_back(make(3, omega + fs));
      omega += fs;
    } else {
      levels.push_back(make(u01(rng) < 0.5 ? 1 : 3, omega));
    }
    omega += 300.0 + 7700.0 * u01(rng);
    ++n;
  }
  return rayzero::AtomicSystem("rand", rayzero::LevelKey{2, 0, 1},
                               std::move(levels));
}

//! Frequency clear of every pole by at least `clearance`, drawn uniformly
//! over (lo, hi) by rejection.
inline double random_omega(std::mt19937_64 &rng, const rayzero::AtomicSystem &s,
                           double lo, double hi, double clearance) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (int tries = 0; tries < 10000; ++tries) {
    const double w = dist(rng);
    bool ok = true;
    for (const auto &p : s.poles())
      if (std::abs(p.omega - w) < clearance) ok = false;
    if (ok) return w;
  }
  return 0.5 * (lo + hi);
}

//! Deterministic standard normal, independent of the library's generator.
class Gauss {
public:
  explicit Gauss(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    double u1 = 0.0;
    while (u1 == 0.0) u1 = (rng_() >> 11) * 0x1.0p-53;
    const double u2 = (rng_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586 * u2);
  }

private:
  std::mt19937_64 rng_;
};

}  // namespace testsupport
