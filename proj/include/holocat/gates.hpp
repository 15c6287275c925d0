#pragma once

// Loop, collision and displaced-collision gates: path generators, ideal
// targets, simulated gate runs and the Zeno projector-product model.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "holocat/catcode.hpp"
#include "holocat/liouvillian.hpp"
#include "holocat/path.hpp"

namespace holocat {

enum class Orientation { Clockwise, CounterClockwise };

enum class BasisTag { Coherent, Cat };

inline const char* to_string(BasisTag b) { return b == BasisTag::Coherent ? "coherent" : "cat"; }

/// d x d matrix in a declared DFS basis.
struct HolonomyMatrix {
  CMatrix U;
  BasisTag basis = BasisTag::Cat;

  HolonomyMatrix in(BasisTag target) const {
    if (target == basis) return *this;
    return {target == BasisTag::Coherent ? cat_to_coherent(U) : coherent_to_cat(U), target};
  }
};

struct SeparationPolicy {
  double hard = 4.0;
  double advisory = 6.0;
};

struct LoopGateSpec {
  int target_root = 0;
  cplx center{};
  double radius = 0.0;
  Orientation orientation = Orientation::Clockwise;
  /// Signed area, positive for clockwise traversal.
  double enclosed_area = 0.0;
  /// Closest approach of the loop to any other root.
  double min_separation = 0.0;
  std::vector<std::string> warnings;

  double phase() const { return 2.0 * enclosed_area; }
};

/// Signed area of a closed root track, clockwise positive: -1/2 oint Im(conj z dz).
inline double signed_area(const RootTrack& track) { return -0.5 * track.green_integral(); }

/// Loop center that puts the circle of the given radius just outside the
/// root, on the ray from the origin through it.
inline cplx outward_loop_center(cplx root, double radius) {
  const double r = std::abs(root);
  if (r == 0.0) return {radius, 0.0};
  return root * (1.0 + radius / r);
}

/// Root nu of the symmetric configuration alpha e_nu traverses a circle of
/// the given radius once; every other root holds.
inline std::pair<ParameterPath, LoopGateSpec> make_loop_path(
    int nu, cplx center, double radius, double T, int d, cplx alpha,
    Orientation orientation = Orientation::Clockwise, SeparationPolicy sep = {},
    RampProfile profile = RampProfile::Linear) {
  if (d < 1) throw InvalidSpec("d must be >= 1");
  if (nu < 0 || nu >= d) throw InvalidSpec("loop target root out of range");
  if (radius < 0.0) throw InvalidSpec("loop radius must be nonnegative");
  if (!(T > 0.0)) throw InvalidSpec("gate time must be positive");
  std::vector<cplx> roots;
  for (int k = 0; k < d; ++k) roots.push_back(alpha * root_of_unity(k, d));
  const cplx start = roots[static_cast<std::size_t>(nu)];
  if (radius > 0.0 && std::abs(std::abs(start - center) - radius) > 1e-9 * std::max(1.0, radius))
    throw InvalidSpec("loop circle does not pass through the target root");

  LoopGateSpec spec;
  spec.target_root = nu;
  spec.center = center;
  spec.radius = radius;
  spec.orientation = orientation;
  spec.min_separation = std::numeric_limits<double>::infinity();
  for (int k = 0; k < d; ++k) {
    if (k == nu) continue;
    const double dist = std::abs(std::abs(roots[static_cast<std::size_t>(k)] - center) - radius);
    spec.min_separation = std::min(spec.min_separation, dist);
  }
  if (spec.min_separation < sep.hard) {
    std::ostringstream msg;
    msg << "loop passes within " << spec.min_separation << " of another root (hard limit "
        << sep.hard << ")";
    throw SeparationViolation(msg.str());
  }
  if (spec.min_separation < sep.advisory) {
    std::ostringstream msg;
    msg << "loop separation " << spec.min_separation << " below advisory " << sep.advisory;
    spec.warnings.push_back(msg.str());
  }

  ParameterPath path;
  path.d = d;
  path.total_T = T;
  const double sweep = (orientation == Orientation::Clockwise ? -2.0 : 2.0) * kPi;
  for (int k = 0; k < d; ++k) {
    const cplx r = roots[static_cast<std::size_t>(k)];
    if (k == nu && radius > 0.0)
      path.roots.push_back(RootTrack{{Segment::arc(center, r, sweep, 1.0, profile)}});
    else
      path.roots.push_back(RootTrack{{Segment::hold(r, 1.0)}});
  }
  spec.enclosed_area = signed_area(path.roots[static_cast<std::size_t>(nu)]);
  return {path, spec};
}

struct CollisionGateSpec {
  double phi = 0.0;
  cplx gamma{};
  double alpha_min = 0.0;
  RampProfile profile = RampProfile::Linear;
};

/// Three equal stages: ramp |alpha| down to alpha_min, drive back out along
/// phase phi, rotate back by -phi. With alpha_min > 0 the second stage turns
/// by phi at alpha_min and then ramps out, keeping the roots continuous.
inline ParameterPath make_collision_path(const CollisionGateSpec& spec, cplx alpha0, int d,
                                         double T) {
  if (d < 1) throw InvalidSpec("d must be >= 1");
  if (!(T > 0.0)) throw InvalidSpec("gate time must be positive");
  if (spec.gamma != cplx{0.0, 0.0} && d != 2)
    throw InvalidSpec("displaced collisions are defined for d = 2 only");
  if (spec.alpha_min < 0.0 || spec.alpha_min >= std::abs(alpha0))
    throw InvalidSpec("alpha_min must satisfy 0 <= alpha_min < |alpha0|");
  const cplx g = spec.gamma;
  const cplx eu = alpha0 / std::abs(alpha0);
  const cplx turn = std::polar(1.0, spec.phi);
  const double third = 1.0 / 3.0;

  ParameterPath path;
  path.d = d;
  path.total_T = T;
  for (int nu = 0; nu < d; ++nu) {
    const cplx e = root_of_unity(nu, d);
    const cplx outer = alpha0 * e;
    const cplx inner = spec.alpha_min * eu * e;
    RootTrack tr;
    tr.segments.push_back(Segment::line(g + outer, g + inner, third, spec.profile));
    if (spec.alpha_min > 0.0) {
      tr.segments.push_back(Segment::arc(g, g + inner, spec.phi, third / 2.0, spec.profile));
      tr.segments.push_back(
          Segment::line(g + inner * turn, g + outer * turn, third / 2.0, spec.profile));
    } else {
      tr.segments.push_back(Segment::line(g + inner, g + outer * turn, third, spec.profile));
    }
    tr.segments.push_back(Segment::arc(g, g + outer * turn, -spec.phi, third, spec.profile));
    path.roots.push_back(std::move(tr));
  }
  // Durations are exact fractions up to rounding; make the last stage absorb it.
  for (auto& tr : path.roots) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < tr.segments.size(); ++k) s += tr.segments[k].duration;
    tr.segments.back().duration = 1.0 - s;
  }
  return path;
}

/// Loop: e^{i theta} on the target coherent state (coherent basis).
inline HolonomyMatrix expected_holonomy(const LoopGateSpec& spec, int d) {
  CMatrix u = CMatrix::Identity(d, d);
  u(spec.target_root, spec.target_root) = std::polar(1.0, spec.phase());
  return {u, BasisTag::Coherent};
}

/// Collision: diag(e^{-i phi mu}) in the cat basis.
inline HolonomyMatrix expected_holonomy(const CollisionGateSpec& spec, int d) {
  CMatrix u = CMatrix::Zero(d, d);
  for (int mu = 0; mu < d; ++mu) u(mu, mu) = std::polar(1.0, -spec.phi * mu);
  return {u, BasisTag::Cat};
}

/// DFS block M_{mu mu'} = <mu|rho|mu'> against an orthonormal basis.
inline CMatrix dfs_block(const DensityOperator& rho, const CatBasis& basis) {
  const CMatrix b = basis.matrix();
  return b.adjoint() * rho * b;
}

inline DensityOperator dfs_density(const CVector& coeffs, const CatBasis& basis) {
  const StateVector psi = basis.matrix() * coeffs;
  return psi * psi.adjoint();
}

inline double impurity(const DensityOperator& rho) {
  const double p = (rho.adjoint().cwiseProduct(rho.transpose())).sum().real();
  const double eps = 1.0 - p;
  return eps < 0.0 && eps > -1e-9 ? 0.0 : eps;
}

/// <psi_t| M |psi_t> with psi_t = U c_in; insensitive to the global phase of U.
inline double block_fidelity(const CMatrix& block, const CMatrix& U, const CVector& c_in) {
  const CVector t = U * c_in;
  return (t.adjoint() * block * t)(0, 0).real();
}

struct GateResult {
  DensityOperator rho_final;
  CMatrix block_cat;
  CMatrix block_coherent;
  double impurity = 0.0;
  double leakage = 0.0;
  double fidelity = std::numeric_limits<double>::quiet_NaN();
  EvolveLog log;
  std::vector<TrajectorySample> samples;
};

/// Runs the path from a DFS input given by cat-basis coefficients and
/// compares against `target` when provided.
inline GateResult run_gate(const ParameterPath& path, double kappa, const CatBasis& basis,
                           const CVector& c_in, const SpaceConfig& cfg, Schedule sched,
                           const std::optional<HolonomyMatrix>& target = std::nullopt,
                           double leakage_limit = 0.1) {
  if (c_in.size() != basis.d) throw DimensionMismatch("input coefficients != d");
  if (std::abs(c_in.norm() - 1.0) > 1e-10) throw InvalidSpec("input coefficients not normalized");
  const DensityOperator rho0 = dfs_density(c_in, basis);
  const Operator P = dfs_projector(basis);
  if (1.0 - (P * rho0 * P).trace().real() > 1e-6) throw InvalidSpec("input leaks out of the DFS");

  sched.T = path.total_T;
  Trajectory tr = evolve(rho0, path, kappa, cfg, std::move(sched));
  GateResult g;
  g.rho_final = tr.final_state;
  g.log = tr.log;
  g.samples = std::move(tr.samples);
  g.block_cat = dfs_block(g.rho_final, basis);
  g.block_coherent = cat_to_coherent(g.block_cat);
  g.impurity = impurity(g.rho_final);
  g.leakage = 1.0 - g.block_cat.trace().real();
  if (g.leakage > leakage_limit) {
    std::ostringstream msg;
    msg << "DFS leakage " << g.leakage << " exceeds " << leakage_limit;
    throw LeakageExcess(msg.str());
  }
  if (target) {
    const CMatrix u = target->in(BasisTag::Cat).U;
    g.fidelity = block_fidelity(g.block_cat, u, c_in);
  }
  return g;
}

/// Phase of U_mu / U_0 for a gate known to be diagonal in the block's
/// basis, read from a single run with all input coefficients nonzero.
inline HolonomyMatrix diagonal_holonomy_from_block(const CMatrix& block, const CVector& c_in,
                                                   BasisTag tag) {
  const auto d = block.rows();
  CMatrix u = CMatrix::Zero(d, d);
  for (Eigen::Index mu = 0; mu < d; ++mu) {
    const cplx ref = c_in(mu) * std::conj(c_in(0));
    if (std::abs(ref) < 1e-12) throw DegenerateInput("input has a vanishing coefficient");
    const cplx m = block(mu, 0) / ref;
    if (std::abs(m) < 1e-4) throw CoherenceLost("DFS coherence below 1e-4");
    u(mu, mu) = m / std::abs(m);
  }
  return {u, tag};
}

// ---------------------------------------------------------------------------
// Zeno model: driving as a path-ordered product of DFS projectors.

/// S = P_{alpha e^{i phi}} ... P_{(2/M) alpha e^{i phi}} P_{(1/M) alpha e^{i phi}}.
inline Operator zeno_product(double phi, cplx alpha, int M, int d, const SpaceConfig& cfg) {
  if (M < 1) throw InvalidSpec("Zeno product needs M >= 1");
  const cplx a = alpha * std::polar(1.0, phi);
  Operator S = Operator::Identity(cfg.n_trunc, cfg.n_trunc);
  for (int k = 1; k <= M; ++k) {
    const Operator P = dfs_projector(cat_basis(a * (static_cast<double>(k) / M), d, cfg));
    S = (P * S).eval();
  }
  return S;
}

struct ZenoResiduals {
  int M = 0;
  /// || (R^dag S_phi S_0^dag - S_0 R^dag S_0^dag) P_alpha ||
  double identity_residual = 0.0;
  /// || (R^dag S_phi S_0^dag - sum_mu e^{-i phi mu} |mu><mu|) P_alpha ||
  double gate_residual = 0.0;
};

inline ZenoResiduals zeno_residuals(double phi, cplx alpha, int M, int d, const SpaceConfig& cfg) {
  const Operator S0 = zeno_product(0.0, alpha, M, d, cfg);
  const Operator Sp = zeno_product(phi, alpha, M, d, cfg);
  const Operator Rd = rotation(-phi, cfg);
  const CatBasis basis = cat_basis(alpha, d, cfg);
  const Operator P = dfs_projector(basis);
  const Operator lhs = Rd * Sp * S0.adjoint();
  const Operator rhs = S0 * Rd * S0.adjoint();
  Operator ideal = Operator::Zero(cfg.n_trunc, cfg.n_trunc);
  for (int mu = 0; mu < d; ++mu) {
    const auto& v = basis.states[static_cast<std::size_t>(mu)];
    ideal += std::polar(1.0, -phi * mu) * v * v.adjoint();
  }
  ZenoResiduals z;
  z.M = M;
  z.identity_residual = spectral_norm((lhs - rhs) * P);
  z.gate_residual = spectral_norm((lhs - ideal) * P);
  return z;
}

}  // namespace holocat
