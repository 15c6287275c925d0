#pragma once

// Metric extraction, power-law fits, gate configuration files and the
// parallel sweep driver.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "holocat/catcode.hpp"
#include "holocat/gates.hpp"
#include "holocat/liouvillian.hpp"

namespace holocat {

inline double wrap_phase(double x) {
  x = std::remainder(x, 2.0 * kPi);
  return x <= -kPi ? x + 2.0 * kPi : x;
}

/// Phase of c_j relative to c_i after the gate, referenced to the input:
/// arg(M_ji / M0_ji) in (-pi, pi].
inline double extract_relative_phase(const CMatrix& block, const CMatrix& block_in, int i, int j,
                                     double min_coherence = 1e-4) {
  if (std::abs(block(j, i)) < min_coherence) {
    std::ostringstream msg;
    msg << "|M_" << j << i << "| = " << std::abs(block(j, i)) << " below " << min_coherence;
    throw CoherenceLost(msg.str());
  }
  if (std::abs(block_in(j, i)) < min_coherence) throw DegenerateInput("input has no coherence on the pair");
  return wrap_phase(std::arg(block(j, i) / block_in(j, i)));
}

// ---------------------------------------------------------------------------
// Fits.

struct FitResult {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double slope_stderr = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  int samples = 0;
  double x_min = 0.0, x_max = 0.0;
  bool confident = false;  // samples >= 4 and R^2 >= 0.9
};

/// Ordinary least squares of y on x.
inline FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionMismatch("fit inputs differ in length");
  FitResult f;
  f.samples = static_cast<int>(x.size());
  if (f.samples < 2) return f;
  const double n = f.samples;
  double sx = 0, sy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx <= 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - f.intercept - f.slope * x[k];
    sse += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.slope_stderr = f.samples > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : std::numeric_limits<double>::infinity();
  f.x_min = *std::min_element(x.begin(), x.end());
  f.x_max = *std::max_element(x.begin(), x.end());
  f.confident = f.samples >= 4 && f.r2 >= 0.9;
  return f;
}

/// Slope of log y against log x; x_min/x_max are reported on the linear scale.
inline FitResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw InvalidSpec("log-log fit needs positive data");
    lx.push_back(std::log(x[k]));
    ly.push_back(std::log(y[k]));
  }
  FitResult f = linear_fit(lx, ly);
  if (!lx.empty()) {
    f.x_min = *std::min_element(x.begin(), x.end());
    f.x_max = *std::max_element(x.begin(), x.end());
  }
  return f;
}

// ---------------------------------------------------------------------------
// Gate configuration.

enum class GateKind { Loop, Collision };

inline const char* to_string(GateKind k) { return k == GateKind::Loop ? "loop" : "collision"; }

inline constexpr const char* kSchema = "holocat-gate/1";

struct GateConfig {
  GateKind kind = GateKind::Loop;
  double phi = 0.0;          // collision phase
  double area = kPi / 4.0;   // loop area
  int target = -1;           // loop root; -1 picks the last root
  Orientation orientation = Orientation::Clockwise;
  double alpha_min = 0.0;
  cplx gamma{};
  RampProfile profile = RampProfile::Linear;
  double T = 200.0;
  int n_trunc = 0;  // 0: adequate truncation for the path plus n_margin
  int n_margin = 6;
  double tail_tol = 1e-5;
  double kappa = 1.0;
  int d = 2;
  double alpha = 2.0;
  Integrator integrator = Integrator::EtdRk4;
  long steps = 0;
  double step_scale = 1.0;  // multiplies the automatic step count
  int samples = 0;
  double min_separation = 4.0;
  double advisory_separation = 6.0;
};

/// Everything needed to run one gate.
struct GateSetup {
  GateConfig config;
  ParameterPath path;
  SpaceConfig space;
  CatBasis basis;
  CVector c_in;  // cat-basis input coefficients
  HolonomyMatrix target;
  std::optional<LoopGateSpec> loop;
  double expected_phase = 0.0;
  std::pair<int, int> phase_pair{0, 1};
  BasisTag phase_basis = BasisTag::Cat;
  std::vector<std::string> warnings;
};

inline GateSetup build_gate(const GateConfig& c) {
  if (c.d < 1) throw InvalidSpec("jump.d must be >= 1");
  if (!(c.kappa > 0.0)) throw InvalidSpec("jump.kappa must be positive");
  if (!(c.T > 0.0)) throw InvalidSpec("path.T must be positive");
  if (!(c.alpha > 0.0)) throw InvalidSpec("jump.alpha must be positive");
  GateSetup s;
  s.config = c;
  const cplx alpha{c.alpha, 0.0};
  if (c.kind == GateKind::Loop) {
    if (c.d < 2) throw InvalidSpec("loop gates need d >= 2");
    if (c.area < 0.0) throw InvalidSpec("gate.area must be nonnegative");
    const int nu = c.target < 0 ? c.d - 1 : c.target;
    if (nu >= c.d) throw InvalidSpec("gate.target out of range");
    const double r = std::sqrt(c.area / kPi);
    const cplx root = alpha * root_of_unity(nu, c.d);
    auto [path, spec] = make_loop_path(nu, outward_loop_center(root, r), r, c.T, c.d, alpha,
                                       c.orientation, {c.min_separation, c.advisory_separation},
                                       c.profile);
    s.path = std::move(path);
    s.warnings = spec.warnings;
    s.target = expected_holonomy(spec, c.d);
    s.expected_phase = wrap_phase(spec.phase());
    s.phase_pair = {0, nu};
    s.phase_basis = BasisTag::Coherent;
    s.loop = std::move(spec);
  } else {
    CollisionGateSpec spec{c.phi, c.gamma, c.alpha_min, c.profile};
    s.path = make_collision_path(spec, alpha, c.d, c.T);
    s.target = expected_holonomy(spec, c.d);
    s.expected_phase = wrap_phase(-c.phi);
    s.phase_pair = {0, c.d > 1 ? 1 : 0};
    s.phase_basis = BasisTag::Cat;
  }
  const int need = adequate_truncation(s.path.max_modulus());
  s.space = SpaceConfig(c.n_trunc > 0 ? c.n_trunc : need + c.n_margin, c.tail_tol);
  s.basis = cat_basis(alpha, c.d, s.space, c.gamma);
  if (c.d > 1 && s.basis.regime_metric < c.advisory_separation)
    s.warnings.push_back("regime metric " + std::to_string(s.basis.regime_metric) +
                         " below advisory " + std::to_string(c.advisory_separation));
  // Loop gates act diagonally on coherent states, so the input is an equal
  // superposition of them; collision gates act diagonally on cats.
  if (c.kind == GateKind::Loop) {
    CVector coh = CVector::Constant(c.d, 1.0 / std::sqrt(static_cast<double>(c.d)));
    s.c_in = fourier_matrix(c.d) * coh;
  } else {
    s.c_in = CVector::Constant(c.d, 1.0 / std::sqrt(static_cast<double>(c.d)));
  }
  return s;
}

struct GateRun {
  GateSetup setup;
  GateResult result;
  double phase = std::numeric_limits<double>::quiet_NaN();
  double phase_error = std::numeric_limits<double>::quiet_NaN();
};

inline long steps_for(const GateSetup& s) {
  const auto& c = s.config;
  if (c.steps > 0) return c.steps;
  const long base = recommended_steps(s.path, c.kappa, s.space.n_trunc, c.integrator);
  return std::max<long>(1, static_cast<long>(std::ceil(base * c.step_scale)));
}

inline GateRun simulate(const GateSetup& s) {
  Schedule sched;
  sched.T = s.config.T;
  sched.integrator = s.config.integrator;
  sched.steps = steps_for(s);
  sched.samples = s.config.samples;
  GateRun run;
  run.setup = s;
  run.result = run_gate(s.path, s.config.kappa, s.basis, s.c_in, s.space, sched, s.target);
  if (s.config.d > 1) {
    const CMatrix in_cat = s.c_in * s.c_in.adjoint();
    const bool coh = s.phase_basis == BasisTag::Coherent;
    const CMatrix& out = coh ? run.result.block_coherent : run.result.block_cat;
    const CMatrix in = coh ? cat_to_coherent(in_cat) : in_cat;
    run.phase = extract_relative_phase(out, in, s.phase_pair.first, s.phase_pair.second);
    run.phase_error = std::abs(wrap_phase(run.phase - s.expected_phase));
  }
  return run;
}

inline GateRun simulate(const GateConfig& c) { return simulate(build_gate(c)); }

// ---------------------------------------------------------------------------
// Structured-text (INI) configuration.

namespace pt = boost::property_tree;

inline std::string fmt12(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

namespace detail {

template <typename T>
T get_field(const pt::ptree& tree, const std::string& key, const T& fallback,
            const std::string& source) {
  const auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  try {
    return tree.get<T>(key);
  } catch (const pt::ptree_bad_data&) {
    throw ConfigError(source + ": field '" + key + "' has invalid value '" + *node + "'");
  }
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

}  // namespace detail

/// Recognized keys, as section.field.
inline const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "meta.schema",        "gate.kind",          "gate.phi",          "gate.area",
      "gate.target",        "gate.orientation",   "gate.alpha_min",    "gate.gamma_re",
      "gate.gamma_im",      "gate.profile",       "gate.min_separation",
      "gate.advisory_separation",                 "path.T",            "path.samples",
      "space.n_trunc",      "space.n_margin",     "space.tail_tol",     "jump.kappa",        "jump.d",
      "jump.alpha",         "integrator.method",  "integrator.steps",  "integrator.step_scale",
      "sweep.T",            "sweep.alpha",        "sweep.threads",     "sweep.output",
      "gap.separations",    "gap.n_trunc"};
  return keys;
}

inline GateConfig gate_config_from_tree(const pt::ptree& tree, const std::string& source) {
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(source + ": key '" + section + "' outside any section");
    for (const auto& [field, _] : body) {
      const std::string key = section + "." + field;
      const auto& ks = known_config_keys();
      if (std::find(ks.begin(), ks.end(), key) == ks.end())
        throw ConfigError(source + ": unknown field '" + key + "'");
    }
  }
  const std::string schema = detail::get_field<std::string>(tree, "meta.schema", kSchema, source);
  if (schema != kSchema)
    throw ConfigError(source + ": unsupported schema '" + schema + "' (expected " + kSchema + ")");

  GateConfig c;
  const std::string kind = detail::lower(detail::get_field<std::string>(tree, "gate.kind", "loop", source));
  if (kind == "loop") c.kind = GateKind::Loop;
  else if (kind == "collision") c.kind = GateKind::Collision;
  else throw ConfigError(source + ": field 'gate.kind' must be loop or collision, got '" + kind + "'");
  c.phi = detail::get_field(tree, "gate.phi", c.phi, source);
  c.area = detail::get_field(tree, "gate.area", c.area, source);
  c.target = detail::get_field(tree, "gate.target", c.target, source);
  const std::string orient =
      detail::lower(detail::get_field<std::string>(tree, "gate.orientation", "clockwise", source));
  if (orient == "clockwise" || orient == "cw") c.orientation = Orientation::Clockwise;
  else if (orient == "counterclockwise" || orient == "ccw") c.orientation = Orientation::CounterClockwise;
  else throw ConfigError(source + ": field 'gate.orientation' must be clockwise or counterclockwise");
  c.alpha_min = detail::get_field(tree, "gate.alpha_min", c.alpha_min, source);
  c.gamma = {detail::get_field(tree, "gate.gamma_re", 0.0, source),
             detail::get_field(tree, "gate.gamma_im", 0.0, source)};
  const std::string prof = detail::lower(detail::get_field<std::string>(tree, "gate.profile", "linear", source));
  if (prof == "linear") c.profile = RampProfile::Linear;
  else if (prof == "smoothstep") c.profile = RampProfile::Smoothstep;
  else throw ConfigError(source + ": field 'gate.profile' must be linear or smoothstep");
  c.min_separation = detail::get_field(tree, "gate.min_separation", c.min_separation, source);
  c.advisory_separation = detail::get_field(tree, "gate.advisory_separation", c.advisory_separation, source);
  c.T = detail::get_field(tree, "path.T", c.T, source);
  c.samples = detail::get_field(tree, "path.samples", c.samples, source);
  c.n_trunc = detail::get_field(tree, "space.n_trunc", c.n_trunc, source);
  c.n_margin = detail::get_field(tree, "space.n_margin", c.n_margin, source);
  if (c.n_trunc < 0 || c.n_margin < 0) throw ConfigError(source + ": truncation fields must be nonnegative");
  c.tail_tol = detail::get_field(tree, "space.tail_tol", c.tail_tol, source);
  c.kappa = detail::get_field(tree, "jump.kappa", c.kappa, source);
  c.d = detail::get_field(tree, "jump.d", c.d, source);
  c.alpha = detail::get_field(tree, "jump.alpha", c.alpha, source);
  const std::string method =
      detail::lower(detail::get_field<std::string>(tree, "integrator.method", "etdrk4", source));
  if (method == "etdrk4") c.integrator = Integrator::EtdRk4;
  else if (method == "rk4") c.integrator = Integrator::Rk4;
  else throw ConfigError(source + ": field 'integrator.method' must be etdrk4 or rk4");
  c.steps = detail::get_field(tree, "integrator.steps", c.steps, source);
  c.step_scale = detail::get_field(tree, "integrator.step_scale", c.step_scale, source);
  if (!(c.step_scale > 0.0)) throw ConfigError(source + ": field 'integrator.step_scale' must be positive");
  return c;
}

inline pt::ptree read_config_tree(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.filename() + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return tree;
}

inline GateConfig load_gate_config(const std::string& path) {
  return gate_config_from_tree(read_config_tree(path), path);
}

inline pt::ptree gate_config_tree(const GateConfig& c) {
  pt::ptree t;
  t.put("meta.schema", kSchema);
  t.put("gate.kind", to_string(c.kind));
  t.put("gate.phi", fmt12(c.phi));
  t.put("gate.area", fmt12(c.area));
  t.put("gate.target", c.target);
  t.put("gate.orientation", c.orientation == Orientation::Clockwise ? "clockwise" : "counterclockwise");
  t.put("gate.alpha_min", fmt12(c.alpha_min));
  t.put("gate.gamma_re", fmt12(c.gamma.real()));
  t.put("gate.gamma_im", fmt12(c.gamma.imag()));
  t.put("gate.profile", c.profile == RampProfile::Linear ? "linear" : "smoothstep");
  t.put("path.T", fmt12(c.T));
  t.put("space.n_trunc", c.n_trunc);
  t.put("space.n_margin", c.n_margin);
  t.put("space.tail_tol", fmt12(c.tail_tol));
  t.put("jump.kappa", fmt12(c.kappa));
  t.put("jump.d", c.d);
  t.put("jump.alpha", fmt12(c.alpha));
  t.put("integrator.method", to_string(c.integrator));
  t.put("integrator.steps", c.steps);
  t.put("integrator.step_scale", fmt12(c.step_scale));
  return t;
}

/// Run summary in the config format: the effective configuration plus a
/// [result] section.
inline pt::ptree run_summary_tree(const GateRun& run) {
  pt::ptree t = gate_config_tree(run.setup.config);
  t.put("result.n_trunc", run.setup.space.n_trunc);
  t.put("result.steps", run.result.log.steps);
  t.put("result.h", fmt12(run.result.log.h));
  t.put("result.integrator", to_string(run.result.log.integrator));
  t.put("result.impurity", fmt12(run.result.impurity));
  t.put("result.leakage", fmt12(run.result.leakage));
  t.put("result.fidelity", fmt12(run.result.fidelity));
  t.put("result.phase", fmt12(run.phase));
  t.put("result.expected_phase", fmt12(run.setup.expected_phase));
  t.put("result.phase_error", fmt12(run.phase_error));
  t.put("result.max_trace_drift", fmt12(run.result.log.max_trace_drift));
  t.put("result.max_hermiticity_residual", fmt12(run.result.log.max_hermiticity_residual));
  t.put("result.max_tail_weight", fmt12(run.result.log.max_tail_weight));
  t.put("result.corrections", run.result.log.corrections);
  t.put("result.wall_seconds", fmt12(run.result.log.wall_seconds));
  for (std::size_t k = 0; k < run.setup.warnings.size(); ++k)
    t.put("warnings.w" + std::to_string(k), run.setup.warnings[k]);
  return t;
}

inline void write_tree_ini(const pt::ptree& t, std::ostream& os) { pt::write_ini(os, t); }

// ---------------------------------------------------------------------------
// Sweeps.

struct SweepRecord {
  int d = 0;
  double alpha = 0.0;
  double kappa_T = 0.0;
  GateKind kind = GateKind::Loop;
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double dfs_fidelity = std::numeric_limits<double>::quiet_NaN();
  double leakage = std::numeric_limits<double>::quiet_NaN();
  double gap_over_kappa = std::numeric_limits<double>::quiet_NaN();
  double phase = std::numeric_limits<double>::quiet_NaN();
  int n_trunc = 0;
  long steps = 0;
  std::string status = "ok";
  double wall_time = 0.0;

  std::string key() const {
    return std::string(to_string(kind)) + "|" + std::to_string(d) + "|" + fmt12(alpha) + "|" +
           fmt12(kappa_T);
  }
  bool ok() const { return status == "ok"; }
};

inline const char* kSweepHeader =
    "kind,d,alpha,kappa_T,epsilon,dfs_fidelity,leakage,gap_over_kappa,phase,n_trunc,steps,status,"
    "wall_time";

inline std::string to_csv_row(const SweepRecord& r) {
  std::string status = r.status;
  std::replace(status.begin(), status.end(), ',', ';');
  std::replace(status.begin(), status.end(), '\n', ' ');
  std::ostringstream os;
  os << std::setprecision(12) << to_string(r.kind) << ',' << r.d << ',' << r.alpha << ','
     << r.kappa_T << ',' << r.epsilon << ',' << r.dfs_fidelity << ',' << r.leakage << ','
     << r.gap_over_kappa << ',' << r.phase << ',' << r.n_trunc << ',' << r.steps << ',' << status
     << ',' << r.wall_time;
  return os.str();
}

inline std::optional<SweepRecord> parse_csv_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (f.size() != 13 || f[0] == "kind") return std::nullopt;
  auto num = [](const std::string& s) {
    try {
      return std::stod(s);
    } catch (...) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  SweepRecord r;
  r.kind = f[0] == "loop" ? GateKind::Loop : GateKind::Collision;
  r.d = std::stoi(f[1]);
  r.alpha = num(f[2]);
  r.kappa_T = num(f[3]);
  r.epsilon = num(f[4]);
  r.dfs_fidelity = num(f[5]);
  r.leakage = num(f[6]);
  r.gap_over_kappa = num(f[7]);
  r.phase = num(f[8]);
  r.n_trunc = std::stoi(f[9]);
  r.steps = std::stol(f[10]);
  r.status = f[11];
  r.wall_time = num(f[12]);
  return r;
}

inline std::vector<SweepRecord> read_sweep_csv(const std::string& path) {
  std::vector<SweepRecord> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line))
    if (auto r = parse_csv_row(line)) out.push_back(*r);
  return out;
}

struct SweepGrid {
  GateConfig base;
  std::vector<double> T_values;
  std::vector<double> alpha_values;
  /// Explicit (T, alpha) points; when nonempty the product grid is ignored.
  std::vector<std::pair<double, double>> points;
};

struct SweepOptions {
  int threads = 1;
  std::string output;   // CSV path; empty disables file output
  bool resume = true;   // skip grid points already present in `output`
  bool compute_gap = false;
};

struct SweepFits {
  /// log eps vs log T at the largest alpha with enough points.
  FitResult vs_T;
  /// log eps vs log alpha at the largest T; p = -slope.
  FitResult vs_alpha;
  double p = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  std::vector<SweepRecord> records;  // grid order
  SweepFits fits;
  int reused = 0;
};

inline SweepFits fit_sweep(const std::vector<SweepRecord>& rs) {
  SweepFits f;
  std::map<double, std::vector<const SweepRecord*>> by_alpha, by_T;
  for (const auto& r : rs) {
    if (!r.ok() || !(r.epsilon > 0.0)) continue;
    by_alpha[r.alpha].push_back(&r);
    by_T[r.kappa_T].push_back(&r);
  }
  for (auto it = by_alpha.rbegin(); it != by_alpha.rend(); ++it) {
    if (it->second.size() < 2) continue;
    std::vector<double> x, y;
    for (auto* r : it->second) {
      x.push_back(r->kappa_T);
      y.push_back(r->epsilon);
    }
    f.vs_T = loglog_fit(x, y);
    break;
  }
  for (auto it = by_T.rbegin(); it != by_T.rend(); ++it) {
    if (it->second.size() < 2) continue;
    std::vector<double> x, y;
    for (auto* r : it->second) {
      x.push_back(r->alpha);
      y.push_back(r->epsilon);
    }
    f.vs_alpha = loglog_fit(x, y);
    f.p = -f.vs_alpha.slope;
    break;
  }
  return f;
}

inline double gap_over_kappa_at(int d, double alpha, double kappa, int n_trunc = 0);

inline SweepRecord run_sweep_point(const GateConfig& base, double T, double alpha, bool compute_gap) {
  SweepRecord r;
  r.d = base.d;
  r.alpha = alpha;
  r.kappa_T = base.kappa * T;
  r.kind = base.kind;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    GateConfig c = base;
    c.T = T;
    c.alpha = alpha;
    const GateRun run = simulate(c);
    r.epsilon = run.result.impurity;
    r.dfs_fidelity = run.result.fidelity;
    r.leakage = run.result.leakage;
    r.phase = run.phase;
    r.n_trunc = run.setup.space.n_trunc;
    r.steps = run.result.log.steps;
    if (compute_gap) r.gap_over_kappa = gap_over_kappa_at(c.d, alpha, c.kappa);
  } catch (const std::exception& e) {
    r.status = e.what();
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Runs every grid point on a bounded worker pool. Completed rows are
/// rewritten to `output` (sorted by grid order) after each point, so an
/// interrupted sweep keeps its finished rows and resumes from them.
inline SweepResult scaling_sweep(const SweepGrid& grid, const SweepOptions& opt) {
  struct Point {
    double T, alpha;
  };
  std::vector<Point> points;
  if (!grid.points.empty()) {
    for (auto [T, a] : grid.points) points.push_back({T, a});
  } else {
    for (double a : grid.alpha_values)
      for (double T : grid.T_values) points.push_back({T, a});
  }

  // Rows already on disk: reused when they match a grid point, carried
  // through unchanged otherwise.
  std::map<std::string, SweepRecord> done;
  std::vector<SweepRecord> foreign;
  if (opt.resume && !opt.output.empty() && std::filesystem::exists(opt.output))
    for (auto& r : read_sweep_csv(opt.output))
      if (r.ok()) done.emplace(r.key(), r);

  SweepResult result;
  std::vector<std::optional<SweepRecord>> slots(points.size());
  std::vector<std::size_t> todo;
  for (std::size_t k = 0; k < points.size(); ++k) {
    SweepRecord probe;
    probe.kind = grid.base.kind;
    probe.d = grid.base.d;
    probe.alpha = points[k].alpha;
    probe.kappa_T = grid.base.kappa * points[k].T;
    if (auto it = done.find(probe.key()); it != done.end()) {
      slots[k] = it->second;
      ++result.reused;
    } else {
      todo.push_back(k);
    }
  }
  for (const auto& [key, r] : done) {
    bool used = false;
    for (const auto& s : slots)
      if (s && s->key() == key) used = true;
    if (!used) foreign.push_back(r);
  }

  std::mutex mu;
  auto flush = [&] {
    if (opt.output.empty()) return;
    const std::string tmp = opt.output + ".tmp";
    {
      std::ofstream os(tmp);
      os << kSweepHeader << '\n';
      for (const auto& r : foreign) os << to_csv_row(r) << '\n';
      for (const auto& s : slots)
        if (s) os << to_csv_row(*s) << '\n';
    }
    std::filesystem::rename(tmp, opt.output);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const std::size_t k = todo[i];
      SweepRecord r = run_sweep_point(grid.base, points[k].T, points[k].alpha, opt.compute_gap);
      std::lock_guard<std::mutex> lock(mu);
      slots[k] = std::move(r);
      flush();
    }
  };
  const int nthreads = std::max(1, std::min<int>(opt.threads, static_cast<int>(todo.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (todo.empty()) flush();

  for (auto& s : slots) result.records.push_back(*s);
  result.fits = fit_sweep(result.records);
  return result;
}

// ---------------------------------------------------------------------------
// Dissipation gap.

/// Gap of the static symmetric configuration, in units of kappa. The
/// truncation defaults to spectral_truncation(alpha).
inline double gap_over_kappa_at(int d, double alpha, double kappa, int n_trunc) {
  const int n = n_trunc > 0 ? n_trunc : spectral_truncation(alpha);
  const SpaceConfig cfg(n);
  std::vector<cplx> roots;
  for (int nu = 0; nu < d; ++nu) roots.push_back(alpha * root_of_unity(nu, d));
  const Operator F = build_jump(JumpSpec{kappa, roots}, cfg);
  return dissipation_gap(liouvillian_spectrum(hermitian_representation_from_jump(F)), kappa);
}

struct GapPoint {
  double separation = 0.0;
  double gap_over_kappa = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();  // gap / separation^2
  int n_trunc = 0;
  std::string status = "ok";
};

struct GapSweepResult {
  std::vector<GapPoint> points;
  /// Least-squares c in gap = c * separation^2 (through the origin).
  double proportionality = std::numeric_limits<double>::quiet_NaN();
  /// log gap vs log separation; slope 2 for a quadratic law.
  FitResult loglog;
};

/// d = 2 roots at +-separation/2.
inline GapSweepResult gap_sweep(const std::vector<double>& separations, double kappa = 1.0,
                                int n_trunc = 0) {
  GapSweepResult out;
  std::vector<double> xs, ys;
  double num = 0.0, den = 0.0;
  for (double s : separations) {
    GapPoint p;
    p.separation = s;
    const double a = 0.5 * s;
    p.n_trunc = n_trunc > 0 ? n_trunc : spectral_truncation(a);
    try {
      if (s < 0.0) throw InvalidSpec("separation must be nonnegative");
      if (a == 0.0) {
        const SpaceConfig cfg(p.n_trunc);
        const Operator F = build_jump(JumpSpec{kappa, {0.0, 0.0}}, cfg);
        p.gap_over_kappa =
            dissipation_gap(liouvillian_spectrum(hermitian_representation_from_jump(F)), kappa);
      } else {
        p.gap_over_kappa = gap_over_kappa_at(2, a, kappa, p.n_trunc);
      }
      if (s > 0.0) {
        p.ratio = p.gap_over_kappa / (s * s);
        num += p.gap_over_kappa * s * s;
        den += s * s * s * s;
        xs.push_back(s);
        ys.push_back(p.gap_over_kappa);
      }
    } catch (const Error& e) {
      p.status = e.what();
    }
    out.points.push_back(p);
  }
  if (den > 0.0) out.proportionality = num / den;
  if (xs.size() >= 2) out.loglog = loglog_fit(xs, ys);
  return out;
}

}  // namespace holocat
