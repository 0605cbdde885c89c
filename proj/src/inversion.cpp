#include "rayzero/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rayzero/amplitude.hpp"
#include "rayzero/constants.hpp"

namespace rayzero {

namespace {

std::string j_str(int twice_j) { return twice_j == 3 ? "3/2" : "1/2"; }

//! Pole index containing level (n [, j]); without j, `low` selects the
//! lowest vs highest pole of the multiplet.
int pole_of(const AtomicSystem &system, int n, std::optional<int> twice_j,
            bool low) {
  const auto &poles = system.poles();
  int found = -1;
  for (int p = 0; p < static_cast<int>(poles.size()); ++p) {
    for (int li : poles[p].level_index) {
      const auto &key = system.levels()[li].key;
      if (key.n != n) continue;
      if (twice_j && key.twice_j != *twice_j) continue;
      if (found < 0 || (low ? p < found : p > found)) found = p;
    }
  }
  if (found < 0)
    throw ValidationError("no pole for multiplet n=" + std::to_string(n) +
                          (twice_j ? " j=" + j_str(*twice_j) : ""));
  return found;
}

//! Resolve a gap hint to the index of its upper bracketing pole.
int resolve_gap(const AtomicSystem &system, const GapHint &hint) {
  const int hi = pole_of(system, hint.hi_n, hint.hi_twice_j, /*low=*/true);
  if (hint.lo_n == 0) {
    if (hi != 0)
      throw ValidationError("bracket " + hint.str() +
                            ": sub-resonant flag requires the first pole");
    return hi;
  }
  if (hi == 0)
    throw ValidationError("bracket " + hint.str() + ": no pole below " +
                          std::to_string(hint.hi_n));
  const int lo = pole_of(system, hint.lo_n, hint.lo_twice_j, /*low=*/false);
  if (lo != hi - 1)
    throw ValidationError("bracket " + hint.str() +
                          ": poles are not adjacent in the loaded system");
  return hi;
}

//! Levels belonging to an unknown group.
std::vector<LevelKey> group_keys(const AtomicSystem &system,
                                 const UnknownGroup &g) {
  std::vector<LevelKey> keys;
  for (int i : system.multiplet(g.n)) {
    const auto &key = system.levels()[i].key;
    if (!g.twice_j || key.twice_j == *g.twice_j) keys.push_back(key);
  }
  if (keys.empty())
    throw ValidationError("unknown " + g.label() + " matches no loaded level");
  return keys;
}

//! System with every unknown group scaled by exp(theta_g) relative to the
//! base dataset values, and optionally the fiducial/remote perturbations.
AtomicSystem apply_scales(const AtomicSystem &base,
                          const std::vector<std::vector<LevelKey>> &groups,
                          const Eigen::VectorXd &theta) {
  std::vector<std::pair<LevelKey, double>> assign;
  for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
    const double c = std::exp(theta[g]);
    for (const auto &key : groups[g])
      for (const auto &lev : base.levels())
        if (lev.key == key) assign.emplace_back(key, lev.m_sq * c);
  }
  return base.with_m_sq(assign);
}

struct FitWorkspace {
  const InversionProblem &problem;
  const SolverConfig &config;
  std::vector<std::vector<LevelKey>> groups;
  std::vector<int> gap_hi;  // upper pole index per measurement

  explicit FitWorkspace(const InversionProblem &p, const SolverConfig &c)
      : problem(p), config(c) {
    for (const auto &g : p.unknowns) groups.push_back(group_keys(p.system, g));
    for (const auto &m : p.measurements)
      gap_hi.push_back(resolve_gap(p.system, m.bracket));
  }

  Eigen::VectorXd predict(const AtomicSystem &sys) const {
    Eigen::VectorXd out(gap_hi.size());
    for (std::size_t k = 0; k < gap_hi.size(); ++k)
      out[k] =
          find_zero_in_gap(sys, gap_hi[k] - 1, gap_hi[k], config).omega_zero;
    return out;
  }

  //! Whitened residuals r_k = (pred_k - meas_k)/sigma_k.
  Eigen::VectorXd residuals(const AtomicSystem &sys) const {
    Eigen::VectorXd r = predict(sys);
    for (std::size_t k = 0; k < gap_hi.size(); ++k)
      r[k] = (r[k] - problem.measurements[k].omega_zero) /
             problem.measurements[k].sigma_omega;
    return r;
  }

  Eigen::VectorXd residuals_at(const Eigen::VectorXd &theta) const {
    return residuals(apply_scales(problem.system, groups, theta));
  }

  //! Central-difference Jacobian d r / d theta, relative step 1e-6.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd &theta, double step) const {
    Eigen::MatrixXd jac(gap_hi.size(), theta.size());
    for (int g = 0; g < theta.size(); ++g) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[g] += step;
      tm[g] -= step;
      jac.col(g) = (residuals_at(tp) - residuals_at(tm)) / (2.0 * step);
    }
    return jac;
  }
};

constexpr double kFdStep = 1e-6;

}  // namespace

std::string GapHint::str() const {
  auto side = [](int n, const std::optional<int> &tj) {
    if (n == 0) return std::string("0");
    return std::to_string(n) + (tj ? "," + j_str(*tj) : "");
  };
  return side(lo_n, lo_twice_j) + ":" + side(hi_n, hi_twice_j);
}

std::string UnknownGroup::label() const {
  return std::to_string(n) + "p" + (twice_j ? "_" + j_str(*twice_j) : "");
}

std::vector<int> InversionProblem::remote_ns() const {
  std::vector<int> out;
  for (int n : system.multiplet_ns()) {
    bool excluded =
        std::find(fiducial_ns.begin(), fiducial_ns.end(), n) != fiducial_ns.end();
    for (const auto &g : unknowns)
      if (g.n == n) excluded = true;
    if (!excluded) out.push_back(n);
  }
  return out;
}

void InversionProblem::validate() const {
  if (unknowns.empty()) throw ValidationError("no unknowns declared");
  if (measurements.size() < unknowns.size())
    throw ValidationError("need at least as many measurements as unknowns");
  for (const auto &m : measurements) {
    if (!(m.sigma_omega > 0.0))
      throw ValidationError("measurement at omega_zero=" +
                            std::to_string(m.omega_zero) +
                            ": sigma_omega must be positive");
    resolve_gap(system, m.bracket);
  }
  for (const auto &g : unknowns) {
    group_keys(system, g);
    bool in_bracket = false;
    for (const auto &m : measurements)
      if (m.bracket.lo_n == g.n || m.bracket.hi_n == g.n) in_bracket = true;
    if (!in_bracket)
      throw RankError("unknown " + g.label() +
                      " appears in no measurement bracket");
  }
  std::set<std::string> seen;
  for (const auto &g : unknowns) {
    if (!seen.insert(g.label()).second)
      throw ValidationError("duplicate unknown " + g.label());
    if (std::find(fiducial_ns.begin(), fiducial_ns.end(), g.n) !=
        fiducial_ns.end())
      throw ValidationError("multiplet n=" + std::to_string(g.n) +
                            " cannot be both unknown and fiducial");
  }
}

std::vector<double> forward_zeros(const AtomicSystem &system,
                                  const std::vector<MeasuredZero> &measurements,
                                  const SolverConfig &config) {
  std::vector<double> out;
  for (const auto &m : measurements) {
    const int hi = resolve_gap(system, m.bracket);
    out.push_back(find_zero_in_gap(system, hi - 1, hi, config).omega_zero);
  }
  return out;
}

InversionResult solve(const InversionProblem &problem,
                      const SolverConfig &config) {
  problem.validate();
  FitWorkspace ws(problem, config);
  const int ng = static_cast<int>(ws.groups.size());

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(ng);
  Eigen::VectorXd r = ws.residuals_at(theta);
  double cost = r.squaredNorm();
  double lambda = 0.0;
  bool converged = false;
  int iterations = 0;

  Eigen::MatrixXd jac;
  while (!converged) {
    if (iterations++ >= config.max_iter)
      throw SolverError("least-squares fit did not converge within max_iter");
    jac = ws.jacobian(theta, kFdStep);

    // indistinguishable parameters (e.g. the j components of a degenerate
    // multiplet) leave Jacobian columns proportional up to finite-difference
    // noise, orders of magnitude below this threshold
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smax > 0.0) || smin / smax < 1e-6)
      throw RankError("Jacobian is rank deficient; an unknown is not "
                      "constrained by the measurements");

    const Eigen::MatrixXd h = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;

    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Eigen::MatrixXd damped = h;
      damped.diagonal().array() += lambda * h.diagonal().array().maxCoeff();
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      const Eigen::VectorXd trial = theta + step;
      const Eigen::VectorXd r_trial = ws.residuals_at(trial);
      const double cost_trial = r_trial.squaredNorm();
      if (cost_trial <= cost + 1e-14 * (1.0 + cost)) {
        theta = trial;
        r = r_trial;
        cost = cost_trial;
        lambda = lambda * 0.25 < 1e-12 ? 0.0 : lambda * 0.25;
        accepted = true;
        if (step.cwiseAbs().maxCoeff() < 1e-12) converged = true;
      } else {
        lambda = lambda == 0.0 ? 1e-4 : lambda * 10.0;
        if (lambda > 1e10)
          throw SolverError("least-squares iteration cannot make progress");
      }
    }
    if (!accepted) throw SolverError("least-squares step rejected repeatedly");
  }

  // covariance of the log-scales from the Jacobian at the solution
  jac = ws.jacobian(theta, kFdStep);
  const Eigen::MatrixXd h = jac.transpose() * jac;
  const Eigen::MatrixXd cov_theta = h.inverse();

  InversionResult result;
  result.iterations = iterations;

  const AtomicSystem fitted = apply_scales(problem.system, ws.groups, theta);
  const Eigen::VectorXd pred = ws.predict(fitted);
  for (std::size_t k = 0; k < problem.measurements.size(); ++k)
    result.residuals.push_back(pred[k] - problem.measurements[k].omega_zero);

  for (int g = 0; g < ng; ++g) {
    UnknownEstimate est;
    est.group = problem.unknowns[g];
    est.scale = std::exp(theta[g]);
    for (const auto &key : ws.groups[g])
      for (const auto &lev : fitted.levels())
        if (lev.key == key) est.m_sq.emplace_back(key, lev.m_sq);
    est.sigma_stat_rel = std::sqrt(std::max(0.0, cov_theta(g, g)));
    result.estimates.push_back(est);
  }

  // member-level statistical covariance in a0^4
  std::vector<double> member_value;
  std::vector<int> member_group;
  for (int g = 0; g < ng; ++g)
    for (const auto &[key, value] : result.estimates[g].m_sq) {
      result.covariance_keys.push_back(key);
      member_value.push_back(value);
      member_group.push_back(g);
    }
  const int nm = static_cast<int>(member_value.size());
  result.covariance.resize(nm, nm);
  for (int i = 0; i < nm; ++i)
    for (int j = 0; j < nm; ++j)
      result.covariance(i, j) = member_value[i] * member_value[j] *
                                cov_theta(member_group[i], member_group[j]);

  // first-order systematic propagation: d theta / d ln(source)
  auto propagate = [&](const AtomicSystem &plus, const AtomicSystem &minus,
                       double rel_unc, const std::string &name,
                       double UnknownEstimate::*slot) {
    InversionProblem pp = problem;
    pp.system = plus;
    InversionProblem pm = problem;
    pm.system = minus;
    const Eigen::VectorXd rp = FitWorkspace(pp, config).residuals_at(theta);
    const Eigen::VectorXd rm = FitWorkspace(pm, config).residuals_at(theta);
    const Eigen::VectorXd dr = (rp - rm) / (2.0 * kFdStep);
    const Eigen::VectorXd dtheta = -h.ldlt().solve(jac.transpose() * dr);
    SensitivityEntry entry;
    entry.source = name;
    for (int g = 0; g < ng; ++g) {
      entry.elasticity.push_back(dtheta[g]);
      result.estimates[g].*slot = std::hypot(result.estimates[g].*slot,
                                             dtheta[g] * rel_unc);
    }
    result.sensitivity.push_back(entry);
  };

  for (int fn : problem.fiducial_ns) {
    double rel_unc = 0.0;
    for (int i : problem.system.multiplet(fn))
      rel_unc = std::max(rel_unc, problem.system.levels()[i].m_sq_rel_unc);
    propagate(problem.system.with_scaled_multiplets({fn}, std::exp(kFdStep)),
              problem.system.with_scaled_multiplets({fn}, std::exp(-kFdStep)),
              rel_unc, "fiducial n=" + std::to_string(fn),
              &UnknownEstimate::sigma_fid_rel);
  }
  if (problem.system.tail()) {
    const auto tail = *problem.system.tail();
    TailEstimate tp = tail, tm = tail;
    tp.p_zz *= std::exp(kFdStep);
    tp.q_xz *= std::exp(kFdStep);
    tm.p_zz *= std::exp(-kFdStep);
    tm.q_xz *= std::exp(-kFdStep);
    propagate(problem.system.with_tail(tp), problem.system.with_tail(tm),
              tail.rel_unc, "tail", &UnknownEstimate::sigma_tail_rel);
  }

  return result;
}

std::vector<double> tail_sensitivity(const InversionProblem &problem,
                                     const InversionResult &result,
                                     double perturbation,
                                     const SolverConfig &config) {
  if (perturbation < 0.0)
    throw ValidationError("perturbation must be >= 0");
  const auto remote = problem.remote_ns();
  std::vector<double> shift(problem.unknowns.size(), 0.0);
  if (perturbation == 0.0) return shift;

  for (const double factor : {1.0 + perturbation, 1.0 - perturbation}) {
    InversionProblem perturbed = problem;
    AtomicSystem sys = problem.system.with_scaled_multiplets(remote, factor);
    if (sys.tail()) {
      TailEstimate t = *sys.tail();
      t.p_zz *= factor;
      t.q_xz *= factor;
      sys = sys.with_tail(t);
    }
    perturbed.system = sys;
    const InversionResult re = solve(perturbed, config);
    for (std::size_t g = 0; g < shift.size(); ++g) {
      const double rel =
          std::abs(re.estimates[g].scale / result.estimates[g].scale - 1.0);
      shift[g] = std::max(shift[g], rel);
    }
  }
  return shift;
}

TailEstimate truncation_bound(const AtomicSystem &system, double alpha_ref,
                              double alpha_ref_unc) {
  if (!(alpha_ref > 0.0)) throw ValidationError("alpha_ref must be positive");
  if (alpha_ref_unc < 0.0) throw ValidationError("alpha_ref_unc must be >= 0");
  const AtomicSystem bare = system.with_tail(std::nullopt);
  const double alpha_partial = dynamic_polarizability(bare, 0.0);
  const double tail_au = alpha_ref - alpha_partial;
  if (tail_au < 0.0)
    throw ValidationError(
        "loaded levels already give alpha(0) = " + std::to_string(alpha_partial) +
        " a.u., exceeding alpha_ref = " + std::to_string(alpha_ref) +
        " (difference " + std::to_string(tail_au) + ", reference unc " +
        std::to_string(alpha_ref_unc) + "); inconsistent inputs");
  TailEstimate tail;
  tail.p_zz = 9.0 * tail_au / constants::hartree_cm1;
  tail.q_xz = 0.0;  // remote levels are nearly j-balanced; Q contributions cancel
  tail.rel_unc = tail_au > 0.0 ? alpha_ref_unc / tail_au : 0.0;
  return tail;
}

namespace {

std::pair<int, std::optional<int>> parse_level_token(const std::string &tok) {
  // "7" or "7,3/2"
  const auto comma = tok.find(',');
  int n = 0;
  try {
    n = std::stoi(tok.substr(0, comma));
  } catch (const std::exception &) {
    throw ValidationError("bad level token '" + tok + "'");
  }
  if (comma == std::string::npos) return {n, std::nullopt};
  const auto j = tok.substr(comma + 1);
  if (j == "1/2") return {n, 1};
  if (j == "3/2") return {n, 3};
  throw ValidationError("bad j token '" + j + "' (want 1/2 or 3/2)");
}

}  // namespace

GapHint parse_gap_hint(const std::string &text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ValidationError("bracket '" + text + "' must be 'lo:hi'");
  GapHint hint;
  const auto lo = text.substr(0, colon);
  const auto hi = text.substr(colon + 1);
  if (lo != "0") {
    auto [n, tj] = parse_level_token(lo);
    hint.lo_n = n;
    hint.lo_twice_j = tj;
  }
  auto [n, tj] = parse_level_token(hi);
  hint.hi_n = n;
  hint.hi_twice_j = tj;
  return hint;
}

InversionProblem load_problem(const std::string &path,
                              const AtomicSystem &system) {
  std::ifstream in(path);
  if (!in) throw ValidationError("problem file not found: " + path);
  InversionProblem problem{system, {}, {}, {}};

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    std::string word;
    row >> word;
    try {
      std::string tok;
      if (word.rfind("species=", 0) == 0) {
        const auto name = word.substr(8);
        if (name != system.species())
          throw ValidationError("problem is for species '" + name +
                                "', dataset is '" + system.species() + "'");
      } else if (word == "unknown") {
        UnknownGroup g;
        while (row >> tok) {
          if (tok.rfind("n=", 0) == 0) g.n = std::stoi(tok.substr(2));
          else if (tok == "j=1/2") g.twice_j = 1;
          else if (tok == "j=3/2") g.twice_j = 3;
          else throw ValidationError("bad unknown token '" + tok + "'");
        }
        if (g.n == 0) throw ValidationError("unknown needs n=<multiplet>");
        problem.unknowns.push_back(g);
      } else if (word == "fiducial") {
        while (row >> tok) {
          if (tok.rfind("n=", 0) == 0)
            problem.fiducial_ns.push_back(std::stoi(tok.substr(2)));
          else throw ValidationError("bad fiducial token '" + tok + "'");
        }
      } else if (word == "measurement") {
        MeasuredZero m;
        bool have_omega = false, have_sigma = false, have_bracket = false;
        while (row >> tok) {
          if (tok.rfind("omega=", 0) == 0) {
            m.omega_zero = std::stod(tok.substr(6));
            have_omega = true;
          } else if (tok.rfind("sigma=", 0) == 0) {
            m.sigma_omega = std::stod(tok.substr(6));
            have_sigma = true;
          } else if (tok.rfind("bracket=", 0) == 0) {
            m.bracket = parse_gap_hint(tok.substr(8));
            have_bracket = true;
          } else {
            throw ValidationError("bad measurement token '" + tok + "'");
          }
        }
        if (!have_omega || !have_sigma || !have_bracket)
          throw ValidationError("measurement needs omega=, sigma=, bracket=");
        problem.measurements.push_back(m);
      } else {
        throw ValidationError("unknown directive '" + word + "'");
      }
    } catch (const ValidationError &e) {
      throw ParseError(path, line_no, e.what());
    } catch (const std::exception &e) {
      throw ParseError(path, line_no, std::string("malformed value: ") + e.what());
    }
  }
  problem.validate();
  return problem;
}

}  // namespace rayzero
