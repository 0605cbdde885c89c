#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "rayzero/cli.hpp"

namespace {

using namespace rayzero;

cli::PoleRef parse_pole_ref(const std::string &text) {
  // "n=7,j=3/2" or "n=7"
  cli::PoleRef ref;
  std::string rest = text;
  if (rest.rfind("n=", 0) != 0)
    throw CLI::ValidationError("--rel-to", "expected n=<int>[,j=1/2|3/2]");
  rest = rest.substr(2);
  const auto comma = rest.find(',');
  ref.n = std::stoi(rest.substr(0, comma));
  if (comma != std::string::npos) {
    const auto j = rest.substr(comma + 1);
    if (j == "j=1/2") ref.twice_j = 1;
    else if (j == "j=3/2") ref.twice_j = 3;
    else throw CLI::ValidationError("--rel-to", "bad j spec '" + j + "'");
  }
  return ref;
}

void add_common(CLI::App *cmd, cli::CommonOptions &common, bool need_dataset = true) {
  auto *d = cmd->add_option("-d,--dataset", common.dataset, "level dataset file");
  if (need_dataset) d->required();
  cmd->add_option("-o,--out", common.out_path, "output file (default: stdout)");
  cmd->add_option("--format", common.format, "csv | human")
      ->check(CLI::IsMember({"csv", "human"}));
  cmd->add_option("--guard-band", common.guard_band,
                  "minimum detuning from any pole, cm^-1");
  cmd->add_option("--threads", common.threads, "worker threads for scans");
}

void add_solver(CLI::App *cmd, SolverConfig &solver) {
  cmd->add_option("--tol", solver.abs_tol_omega, "root tolerance on omega, cm^-1");
  cmd->add_option("--scan-points", solver.scan_points_per_gap,
                  "pre-scan points per gap");
  cmd->add_option("--max-iter", solver.max_iter, "iteration cap");
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"polarization-resolved Rayleigh scattering: spectra, amplitude "
               "zeros, and matrix-element extraction"};
  app.require_subcommand(0, 1);

  bool show_version = false;
  std::string version_dataset;
  app.add_flag("--version", show_version, "print version and dataset fingerprints");
  app.add_option("--dataset", version_dataset,
                 "dataset to fingerprint with --version");

  cli::SpectrumOptions spectrum;
  std::string rel_to_text;
  auto *sp = app.add_subcommand("spectrum", "scan A_zz, A_xz, sigma, P_L over a grid");
  add_common(sp, spectrum.common);
  sp->add_option("--min", spectrum.omega_min, "grid start, cm^-1")->required();
  sp->add_option("--max", spectrum.omega_max, "grid end, cm^-1")->required();
  sp->add_option("--points", spectrum.points, "grid size")->required();
  sp->add_option("--rel-to", rel_to_text,
                 "interpret --min/--max relative to this pole, n=<n>[,j=...]");

  cli::ZerosOptions zeros;
  std::string zeros_rel_to, methods_text = "numerical";
  std::pair<double, double> zrange{0, 0};
  std::pair<int, int> zmult{0, 0};
  auto *zc = app.add_subcommand("zeros", "locate zeros of A_zz between poles");
  add_common(zc, zeros.common);
  auto *zmin = zc->add_option("--min", zrange.first, "range start, cm^-1");
  auto *zmax = zc->add_option("--max", zrange.second, "range end, cm^-1");
  auto *zm = zc->add_option("--multiplets", zmult,
                            "first and last multiplet n of interest");
  zmin->needs(zmax);
  zm->excludes(zmin);
  zc->add_option("--methods", methods_text,
                 "comma list of numerical,resonance-only,approx or 'all'");
  zc->add_option("--rel-to", zeros_rel_to, "report offsets against this pole");
  zc->add_option("--approx-refine", zeros.approx_refine,
                 "fixed-point iterations for the analytic estimate");
  add_solver(zc, zeros.solver);

  cli::InvertOptions invert;
  auto *iv = app.add_subcommand("invert", "fit unknown strengths to measured zeros");
  add_common(iv, invert.common);
  iv->add_option("-p,--problem", invert.problem_path, "problem file")->required();
  iv->add_option("--perturb", invert.perturbation,
                 "relative perturbation for the remote-level sensitivity check");
  add_solver(iv, invert.solver);

  cli::SynthesizeOptions synth;
  std::vector<std::string> unknown_texts, truth_texts;
  auto *sy = app.add_subcommand("synthesize",
                                "generate a measured-zero problem file");
  add_common(sy, synth.common);
  sy->add_option("--unknown", unknown_texts, "unknown group, n[,j] (repeatable)")
      ->required();
  sy->add_option("--fiducial", synth.fiducial_ns, "fiducial multiplet n (repeatable)");
  sy->add_option("--measure", synth.brackets,
                 "gap to measure, lo[,j]:hi[,j] (repeatable)")
      ->required();
  sy->add_option("--truth-scale", truth_texts,
                 "scale a level's strength in the truth system, n[,j]=factor");
  sy->add_option("--noise", synth.noise, "Gaussian noise on zero locations, cm^-1");
  sy->add_option("--sigma", synth.sigma, "recorded sigma_omega, cm^-1");
  sy->add_option("--seed", synth.seed, "RNG seed");
  add_solver(sy, synth.solver);

  cli::PolarizabilityOptions pol;
  std::pair<double, double> prange{0, 0};
  std::pair<double, double> aref{0, 0};
  double pomega = -1.0;
  auto *pc = app.add_subcommand("polarizability",
                                "ground-state dynamic polarizability (a.u.)");
  add_common(pc, pol.common);
  auto *po = pc->add_option("--omega", pomega, "single frequency, cm^-1");
  auto *pmin = pc->add_option("--min", prange.first, "grid start, cm^-1");
  auto *pmax = pc->add_option("--max", prange.second, "grid end, cm^-1");
  pc->add_option("--points", pol.points, "grid size");
  auto *par = pc->add_option("--alpha-ref", aref,
                             "literature static polarizability: value unc (a.u.)");
  po->excludes(pmin);
  pmin->needs(pmax);

  CLI11_PARSE(app, argc, argv);

  if (show_version) {
    std::cout << "rayzero " << rayzero::cli::version << "\n";
    if (!version_dataset.empty()) {
      try {
        std::cout << "dataset " << version_dataset << " fingerprint "
                  << rayzero::file_fingerprint(version_dataset) << "\n";
      } catch (const rayzero::ValidationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
    return 0;
  }

  try {
    if (sp->parsed()) {
      if (!rel_to_text.empty()) spectrum.rel_to = parse_pole_ref(rel_to_text);
      return cli::run_spectrum(spectrum, std::cout, std::cerr);
    }
    if (zc->parsed()) {
      if (*zmin) zeros.range = zrange;
      if (*zm) zeros.multiplets = zmult;
      if (!zeros_rel_to.empty()) zeros.rel_to = parse_pole_ref(zeros_rel_to);
      zeros.methods.clear();
      std::stringstream ms(methods_text);
      std::string tok;
      while (std::getline(ms, tok, ',')) {
        if (tok == "numerical") zeros.methods.push_back(ZeroMethod::Numerical);
        else if (tok == "resonance-only")
          zeros.methods.push_back(ZeroMethod::NumericalResonanceOnly);
        else if (tok == "approx") zeros.methods.push_back(ZeroMethod::ApproxAnalytic);
        else if (tok == "all")
          zeros.methods = {ZeroMethod::Numerical, ZeroMethod::NumericalResonanceOnly,
                           ZeroMethod::ApproxAnalytic};
        else {
          std::cerr << "error: unknown method '" << tok << "'\n";
          return 2;
        }
      }
      return cli::run_zeros(zeros, std::cout, std::cerr);
    }
    if (iv->parsed()) return cli::run_invert(invert, std::cout, std::cerr);
    if (sy->parsed()) {
      for (const auto &text : unknown_texts) {
        rayzero::UnknownGroup g;
        const auto comma = text.find(',');
        g.n = std::stoi(text.substr(0, comma));
        if (comma != std::string::npos) {
          const auto j = text.substr(comma + 1);
          if (j == "1/2") g.twice_j = 1;
          else if (j == "3/2") g.twice_j = 3;
          else {
            std::cerr << "error: bad unknown '" << text << "'\n";
            return 2;
          }
        }
        synth.unknowns.push_back(g);
      }
      for (const auto &text : truth_texts) {
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
          std::cerr << "error: --truth-scale wants n[,j]=factor\n";
          return 2;
        }
        synth.truth_scales.emplace_back(text.substr(0, eq),
                                        std::stod(text.substr(eq + 1)));
      }
      return cli::run_synthesize(synth, std::cout, std::cerr);
    }
    if (pc->parsed()) {
      if (*po) pol.omega = pomega;
      if (*pmin) pol.range = prange;
      if (*par) pol.alpha_ref = aref;
      return cli::run_polarizability(pol, std::cout, std::cerr);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::cout << app.help();
  return 0;
}
