// holocat: command-line driver for gate simulations, sweeps and diagnostics.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "holocat/holocat.hpp"

namespace fs = std::filesystem;
using namespace holocat;

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  unsigned seed = 0;  // accepted for interface stability; runs are deterministic
  int threads = 0;  // 0: sweep.threads from the config, else 1
  int n_trunc = 0;
};

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> v;
  std::string tok;
  std::stringstream ss(s);
  while (ss >> tok) {
    for (auto& ch : tok)
      if (ch == ',') ch = ' ';
    std::stringstream inner(tok);
    double x;
    while (inner >> x) v.push_back(x);
    if (inner.fail() && !inner.eof()) throw ConfigError(what + ": cannot parse '" + tok + "'");
  }
  if (v.empty()) throw ConfigError(what + ": empty list");
  return v;
}

std::ofstream open_out(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  const fs::path p = fs::path(g.out) / name;
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  return os;
}

GateConfig gate_from_globals(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this command");
  GateConfig c = load_gate_config(g.config);
  if (g.n_trunc > 0) c.n_trunc = g.n_trunc;
  return c;
}

void print_run(const GateRun& run) {
  std::cout << std::setprecision(12);
  std::cout << "gate        " << to_string(run.setup.config.kind) << " d=" << run.setup.config.d
            << " alpha=" << run.setup.config.alpha << " kappaT="
            << run.setup.config.kappa * run.setup.config.T << "\n";
  std::cout << "n_trunc     " << run.setup.space.n_trunc << "\n";
  std::cout << "steps       " << run.result.log.steps << " (" << to_string(run.result.log.integrator)
            << ", h=" << run.result.log.h << ")\n";
  std::cout << "phase       " << run.phase << "\n";
  std::cout << "expected    " << run.setup.expected_phase << "\n";
  std::cout << "fidelity    " << run.result.fidelity << "\n";
  std::cout << "impurity    " << run.result.impurity << "\n";
  std::cout << "leakage     " << run.result.leakage << "\n";
  for (const auto& w : run.setup.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_simulate(const Globals& g) {
  GateConfig c = gate_from_globals(g);
  if (c.samples == 0) c.samples = 200;
  const GateSetup setup = build_gate(c);
  Schedule sched;
  sched.T = c.T;
  sched.integrator = c.integrator;
  sched.steps = steps_for(setup);
  sched.samples = c.samples;
  const LadderOperators ops = ladder_operators(setup.space);
  sched.observables = {ops.a, ops.n, dfs_projector(setup.basis)};
  GateRun run;
  run.setup = setup;
  run.result = run_gate(setup.path, c.kappa, setup.basis, setup.c_in, setup.space, sched, setup.target);
  if (c.d > 1) {
    const CMatrix in_cat = setup.c_in * setup.c_in.adjoint();
    const bool coh = setup.phase_basis == BasisTag::Coherent;
    run.phase = extract_relative_phase(coh ? run.result.block_coherent : run.result.block_cat,
                                       coh ? cat_to_coherent(in_cat) : in_cat,
                                       setup.phase_pair.first, setup.phase_pair.second);
    run.phase_error = std::abs(wrap_phase(run.phase - setup.expected_phase));
  }
  Trajectory tr;
  tr.samples = run.result.samples;
  {
    auto os = open_out(g, "trajectory.csv");
    write_trajectory_csv(tr, os, {"a", "n", "dfs"});
  }
  {
    auto os = open_out(g, "summary.ini");
    write_tree_ini(run_summary_tree(run), os);
  }
  print_run(run);
  return 0;
}

int cmd_gate_check(const Globals& g) {
  const GateRun run = simulate(gate_from_globals(g));
  print_run(run);
  std::cout << "phase_error " << run.phase_error << "\n";
  auto os = open_out(g, "gate_check.ini");
  write_tree_ini(run_summary_tree(run), os);
  return 0;
}

int cmd_sweep(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required for sweep");
  const auto tree = read_config_tree(g.config);
  SweepGrid grid;
  grid.base = gate_config_from_tree(tree, g.config);
  if (g.n_trunc > 0) grid.base.n_trunc = g.n_trunc;
  const auto Ts = tree.get_optional<std::string>("sweep.T");
  const auto As = tree.get_optional<std::string>("sweep.alpha");
  if (!Ts || !As) throw ConfigError(g.config + ": sweep needs fields 'sweep.T' and 'sweep.alpha'");
  grid.T_values = parse_list(*Ts, g.config + ": sweep.T");
  grid.alpha_values = parse_list(*As, g.config + ": sweep.alpha");
  SweepOptions opt;
  opt.threads = g.threads > 0 ? g.threads : tree.get<int>("sweep.threads", 1);
  fs::create_directories(g.out);
  opt.output = (fs::path(g.out) / tree.get<std::string>("sweep.output", "sweep.csv")).string();
  const SweepResult res = scaling_sweep(grid, opt);
  std::cout << std::setprecision(12);
  std::cout << kSweepHeader << "\n";
  for (const auto& r : res.records) std::cout << to_csv_row(r) << "\n";
  auto show = [](const char* name, const FitResult& f) {
    std::cout << name << " slope=" << f.slope << " stderr=" << f.slope_stderr << " r2=" << f.r2
              << " n=" << f.samples << (f.confident ? "" : " (low confidence)") << "\n";
  };
  show("fit_vs_T    ", res.fits.vs_T);
  show("fit_vs_alpha", res.fits.vs_alpha);
  std::cout << "p           " << res.fits.p << "\n";
  std::cout << "reused rows " << res.reused << "\n";
  return 0;
}

int cmd_gap(const Globals& g, const std::string& seps, double kappa) {
  std::vector<double> s = parse_list(seps, "--separations");
  const GapSweepResult res = gap_sweep(s, kappa, g.n_trunc);
  auto os = open_out(g, "gap.csv");
  os << "separation,gap_over_kappa,ratio,n_trunc,status\n" << std::setprecision(12);
  std::cout << "separation,gap_over_kappa,ratio,n_trunc,status\n" << std::setprecision(12);
  for (const auto& p : res.points) {
    std::ostringstream row;
    row << std::setprecision(12) << p.separation << ',' << p.gap_over_kappa << ',' << p.ratio << ','
        << p.n_trunc << ',' << p.status;
    os << row.str() << '\n';
    std::cout << row.str() << '\n';
  }
  std::cout << "proportionality " << res.proportionality << "\n";
  std::cout << "loglog_slope    " << res.loglog.slope << "\n";
  return 0;
}

int cmd_wigner(const Globals& g, int d, double alpha, int mu, double extent, int pixels) {
  DensityOperator rho;
  if (!g.config.empty()) {
    const GateRun run = simulate(gate_from_globals(g));
    rho = run.result.rho_final;
  } else {
    int n = g.n_trunc;
    if (n <= 0) {
      n = adequate_truncation(alpha);
      if (extent > 0.0) n = std::max(n, static_cast<int>(std::ceil(8.0 * extent * extent)) + 1);
    }
    const SpaceConfig cfg(n);
    const StateVector v = alpha == 0.0 ? fock_state(mu, cfg) : cat_state(mu, alpha, d, cfg);
    rho = v * v.adjoint();
  }
  // Largest square window inside the reliable radius sqrt(n)/2.
  if (extent <= 0.0) extent = 0.999 * std::sqrt(static_cast<double>(rho.rows()) / 8.0);
  PhaseSpaceGrid grid{-extent, extent, -extent, extent, pixels, pixels};
  const WignerGrid w = wigner(rho, grid);
  {
    auto os = open_out(g, "wigner.csv");
    write_wigner_csv(w, os);
  }
  {
    fs::create_directories(g.out);
    std::ofstream os(fs::path(g.out) / "wigner.pgm", std::ios::binary);
    write_wigner_pgm(w, os);
  }
  std::cout << std::setprecision(12) << "integral " << wigner_integral(w) << "\nmin " << w.values.minCoeff()
            << "\nmax " << w.values.maxCoeff() << "\n";
  return 0;
}

int cmd_connections(const Globals& g, int d, double alpha, const std::string& param, int points,
                    double delta) {
  const int n = g.n_trunc > 0 ? g.n_trunc : adequate_truncation(alpha + 0.5);
  const SpaceConfig cfg(n);
  std::vector<ConnectionSample> samples;
  if (param == "phase") {
    const auto fam = phase_family(alpha, d, cfg);
    for (int k = 0; k < points; ++k)
      samples.push_back(berry_connection(fam, 2.0 * kPi * k / points, delta, "phi"));
  } else if (param == "modulus") {
    const auto fam = modulus_family(0.0, d, cfg);
    const double lo = std::max(0.05, 2.0 * delta);
    for (int k = 0; k < points; ++k) {
      const double r = points == 1 ? alpha : lo + (alpha - lo) * k / (points - 1);
      samples.push_back(berry_connection(fam, r, delta, "modulus"));
    }
  } else {
    throw ConfigError("--lambda must be phase or modulus");
  }
  auto os = open_out(g, "connections.csv");
  write_connection_csv(samples, os);
  write_connection_csv(samples, std::cout);
  return 0;
}

int cmd_rank(const Globals& g, int d, double alpha) {
  const int n = g.n_trunc > 0 ? g.n_trunc : adequate_truncation(alpha);
  const GeneratorSet gs = su_d_generators(d, alpha, SpaceConfig(n));
  std::cout << rank_check(gs) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"holocat: dissipative cat-code holonomic gate simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "gate configuration file (INI)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "reserved; the dynamics are deterministic");
  app.add_option("--threads", g.threads, "worker threads for sweeps")->check(CLI::NonNegativeNumber);
  app.add_option("--n-trunc", g.n_trunc, "override the Fock truncation")->check(CLI::NonNegativeNumber);

  auto* sim = app.add_subcommand("simulate", "run one gate and write trajectory + summary");
  auto* chk = app.add_subcommand("gate-check", "run one gate and compare with its ideal target");
  auto* swp = app.add_subcommand("sweep", "impurity scaling sweep from a grid config");

  auto* gap = app.add_subcommand("gap", "dissipation gap versus root separation (d = 2)");
  std::string seps = "4 5 6";
  double kappa = 1.0;
  gap->add_option("--separations", seps, "separations |alpha0 - alpha1|")->capture_default_str();
  gap->add_option("--kappa", kappa, "jump rate")->capture_default_str();

  int d = 2, mu = 0, pixels = 81, points = 16;
  double alpha = 2.0, extent = 0.0, delta = 1e-3;
  std::string param = "phase";
  auto* wig = app.add_subcommand("wigner", "Wigner function of a cat state or a gate output");
  wig->add_option("--d", d)->capture_default_str();
  wig->add_option("--alpha", alpha)->capture_default_str();
  wig->add_option("--mu", mu)->capture_default_str();
  wig->add_option("--extent", extent, "half-width of the phase-space window (0: automatic)")->capture_default_str();
  wig->add_option("--pixels", pixels)->capture_default_str();

  auto* con = app.add_subcommand("connections", "sample Berry connections of the cat basis");
  con->add_option("--d", d)->capture_default_str();
  con->add_option("--alpha", alpha)->capture_default_str();
  con->add_option("--lambda", param, "phase or modulus")->capture_default_str();
  con->add_option("--points", points)->capture_default_str();
  con->add_option("--delta", delta, "finite-difference step")->capture_default_str();

  auto* rnk = app.add_subcommand("rank", "rank of the su(d) generator set");
  rnk->add_option("--d", d)->capture_default_str();
  rnk->add_option("--alpha", alpha)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*sim) return cmd_simulate(g);
    if (*chk) return cmd_gate_check(g);
    if (*swp) return cmd_sweep(g);
    if (*gap) return cmd_gap(g, seps, kappa);
    if (*wig) return cmd_wigner(g, d, alpha, mu, extent, pixels);
    if (*con) return cmd_connections(g, d, alpha, param, points, delta);
    if (*rnk) return cmd_rank(g, d, alpha);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Validation ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
