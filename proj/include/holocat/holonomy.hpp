#pragma once

// Berry connections of cat-basis families, the LME connection tensor built
// from conserved quantities, path-ordered holonomies, and the su(d)
// generator algebra used for the universality count.

#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "holocat/catcode.hpp"
#include "holocat/gates.hpp"
#include "holocat/liouvillian.hpp"

namespace holocat {

enum class GaugePolicy {
  Raw,      // basis used exactly as produced by the family
  Aligned,  // neighbours re-phased so <mu(l)|mu(l +- delta)> is real positive
};

inline const char* to_string(GaugePolicy g) { return g == GaugePolicy::Raw ? "raw" : "aligned"; }

/// A one-parameter family of orthonormal DFS bases.
using BasisFamily = std::function<CatBasis(double)>;

/// Symmetric cat bases with |alpha| or arg(alpha) as the free parameter.
inline BasisFamily modulus_family(double phi, int d, const SpaceConfig& cfg) {
  return [=](double r) { return cat_basis(std::polar(r, phi), d, cfg); };
}

inline BasisFamily phase_family(double r, int d, const SpaceConfig& cfg) {
  return [=](double phi) { return cat_basis(std::polar(r, phi), d, cfg); };
}

struct ConnectionSample {
  std::string label;
  double lambda = 0.0;
  CMatrix value;  // A_{mu sigma} = i <mu| d/dl |sigma>
  double delta = 0.0;
  double richardson_change = 0.0;  // ||A(delta) - A(delta/2)|| / max(||A||, floor)
  GaugePolicy gauge = GaugePolicy::Raw;
};

namespace detail {

inline CMatrix basis_matrix_aligned(const CatBasis& b, const CatBasis& ref, GaugePolicy g) {
  CMatrix m = b.matrix();
  if (g == GaugePolicy::Aligned) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      const cplx ov = ref.states[static_cast<std::size_t>(k)].dot(m.col(k));
      if (std::abs(ov) > 1e-14) m.col(k) *= std::conj(ov) / std::abs(ov);
    }
  }
  return m;
}

inline CMatrix central_connection(const BasisFamily& fam, double l, double delta, GaugePolicy g) {
  const CatBasis b0 = fam(l);
  const CMatrix p = basis_matrix_aligned(fam(l + delta), b0, g);
  const CMatrix m = basis_matrix_aligned(fam(l - delta), b0, g);
  return kI * b0.matrix().adjoint() * (p - m) / (2.0 * delta);
}

}  // namespace detail

/// Central-difference connection with a step-halving check; the returned
/// value is the Richardson combination of the two estimates.
inline ConnectionSample berry_connection(const BasisFamily& fam, double lambda, double delta,
                                         const std::string& label = "lambda",
                                         GaugePolicy gauge = GaugePolicy::Raw,
                                         double rel_tol = 0.01, double abs_floor = 1e-6) {
  if (!(delta > 0.0)) throw InvalidSpec("finite-difference step must be positive");
  const CMatrix a1 = detail::central_connection(fam, lambda, delta, gauge);
  const CMatrix a2 = detail::central_connection(fam, lambda, 0.5 * delta, gauge);
  ConnectionSample s;
  s.label = label;
  s.lambda = lambda;
  s.delta = delta;
  s.gauge = gauge;
  s.value = (4.0 * a2 - a1) / 3.0;
  const double scale = std::max(max_abs(s.value), abs_floor);
  s.richardson_change = max_abs(a1 - a2) / scale;
  if (max_abs(a1 - a2) > rel_tol * scale) {
    std::ostringstream msg;
    msg << "connection changes by " << s.richardson_change << " (relative) when delta halves";
    throw StepTooCoarse(msg.str());
  }
  return s;
}

/// Rank-4 tensor T(mu d + mu', sigma d + sigma') = i Tr[J_{mu mu'}^dag d/dl(|sigma><sigma'|)].
struct LmeConnection {
  double lambda = 0.0;
  int d = 0;
  CMatrix tensor;
  CMatrix ordinary;  // A at the same point and step
  /// Max entry of T - [delta_{mu' sigma'} A_{mu sigma} - delta_{mu sigma} conj(A_{mu' sigma'})].
  double decomposition_residual = 0.0;
  /// Max over J of ||P J P_perp|| / ||J||.
  double crosstalk_residual = 0.0;
  double max_adjoint_residual = 0.0;
};

/// Decomposition predicted by trace conservation: the second term carries
/// conj(A_{mu' sigma'}) = A_{sigma' mu'}.
inline CMatrix lme_decomposition(const CMatrix& A) {
  const auto d = A.rows();
  CMatrix t = CMatrix::Zero(d * d, d * d);
  for (Eigen::Index m = 0; m < d; ++m)
    for (Eigen::Index mp = 0; mp < d; ++mp)
      for (Eigen::Index s = 0; s < d; ++s)
        for (Eigen::Index sp = 0; sp < d; ++sp) {
          cplx v{0.0, 0.0};
          if (mp == sp) v += A(m, s);
          if (m == s) v -= std::conj(A(mp, sp));
          t(m * d + mp, s * d + sp) = v;
        }
  return t;
}

/// LME connection for a family whose roots are those of the basis at each
/// point (symmetric or displaced configuration).
inline LmeConnection lme_berry_connection(const BasisFamily& fam, double lambda, double delta,
                                          double kappa, const SpaceConfig& cfg, double tol = 1e-7) {
  const CatBasis b0 = fam(lambda);
  const int d = b0.d;
  const Operator F = build_jump(JumpSpec{kappa, b0.roots}, cfg);
  const auto J = conserved_quantities(F, kappa, b0.states, tol);
  const CatBasis bp = fam(lambda + delta);
  const CatBasis bm = fam(lambda - delta);

  LmeConnection out;
  out.lambda = lambda;
  out.d = d;
  out.tensor = CMatrix::Zero(d * d, d * d);
  const Operator P = dfs_projector(b0);
  const Operator Q = Operator::Identity(cfg.n_trunc, cfg.n_trunc) - P;
  for (const auto& q : J) {
    const double jn = q.matrix.norm();
    out.crosstalk_residual = std::max(out.crosstalk_residual, (P * q.matrix * Q).norm() / jn);
    out.max_adjoint_residual = std::max(out.max_adjoint_residual, q.adjoint_residual);
    for (int s = 0; s < d; ++s) {
      for (int sp = 0; sp < d; ++sp) {
        const auto is = static_cast<std::size_t>(s);
        const auto isp = static_cast<std::size_t>(sp);
        // Tr[J^dag |a><b|] = <b| J^dag |a>
        const cplx tp = bp.states[isp].dot(q.matrix.adjoint() * bp.states[is]);
        const cplx tm = bm.states[isp].dot(q.matrix.adjoint() * bm.states[is]);
        out.tensor(q.mu * d + q.mu_prime, s * d + sp) = kI * (tp - tm) / (2.0 * delta);
      }
    }
  }
  out.ordinary = detail::central_connection(fam, lambda, delta, GaugePolicy::Raw);
  out.decomposition_residual = max_abs(out.tensor - lme_decomposition(out.ordinary));
  return out;
}

struct IntegratedHolonomy {
  HolonomyMatrix U;
  double halving_change = 0.0;
  int panels = 0;
};

namespace detail {

/// Ordered product of exp(i A du) over midpoint panels of [0, 1].
inline CMatrix ordered_exponential(const BasisFamily& fam, const std::vector<double>& knots,
                                   int panels_per_piece, double fd_step) {
  const int d = fam(knots.front()).d;
  CMatrix U = CMatrix::Identity(d, d);
  for (std::size_t p = 0; p + 1 < knots.size(); ++p) {
    const double a = knots[p], b = knots[p + 1];
    if (b <= a) continue;
    const double du = (b - a) / panels_per_piece;
    const double h = std::min(fd_step, 0.25 * du);
    for (int k = 0; k < panels_per_piece; ++k) {
      const double mid = a + (k + 0.5) * du;
      const CMatrix A = central_connection(fam, mid, h, GaugePolicy::Raw);
      U = (expm(kI * A * du) * U).eval();
    }
  }
  return U;
}

}  // namespace detail

/// Holonomy of a symmetric root configuration moved along `path`; root 0
/// sets the cat basis at each instant. The path must stay away from the
/// collision point, where the cat basis is not differentiable.
inline IntegratedHolonomy integrate_holonomy(const ParameterPath& path, const SpaceConfig& cfg,
                                             int panels_per_segment = 64, double tol = 1e-3) {
  path.validate();
  const int d = path.d;
  const auto& track = path.roots.front();
  for (int k = 0; k <= 2048; ++k)
    if (std::abs(track.at(k / 2048.0)) < 1e-3)
      throw InvalidSpec("holonomy integration path passes through the collision point");
  const BasisFamily fam = [&](double u) { return cat_basis(track.at(u), d, cfg); };
  std::vector<double> knots{0.0};
  for (const auto& seg : track.segments) knots.push_back(knots.back() + seg.duration);
  knots.back() = 1.0;

  const CMatrix u1 = detail::ordered_exponential(fam, knots, panels_per_segment, 1e-4);
  const CMatrix u2 = detail::ordered_exponential(fam, knots, 2 * panels_per_segment, 1e-4);
  IntegratedHolonomy out;
  out.U = {u2, BasisTag::Cat};
  out.panels = 2 * panels_per_segment;
  out.halving_change = spectral_norm(u1 - u2);
  if (out.halving_change > tol) {
    std::ostringstream msg;
    msg << "holonomy changes by " << out.halving_change << " when the panel width halves";
    throw StepTooCoarse(msg.str());
  }
  return out;
}

/// Distance between unitaries after removing the best global phase.
inline double phase_aligned_distance(const CMatrix& a, const CMatrix& b) {
  const cplx ov = (b.adjoint() * a).trace();
  const cplx ph = std::abs(ov) > 0.0 ? ov / std::abs(ov) : cplx{1.0, 0.0};
  return spectral_norm(a - ph * b);
}

// ---------------------------------------------------------------------------
// su(d) generators in the orthonormal cat basis.

struct GeneratorSet {
  int d = 0;
  double alpha = 0.0;
  std::vector<CMatrix> projectors;  // pi_nu
  CMatrix chi;                      // diag(0, 1, ..., d-1)
  /// g_{nu nu'} = [pi_nu, [chi, pi_nu']] for nu != nu', in (nu, nu') order.
  std::vector<CMatrix> g;
  /// (i/2)[pi_nu - pi_nu', g_{nu nu'}], same order.
  std::vector<CMatrix> partners;
  std::vector<std::pair<int, int>> pairs;

  std::vector<CMatrix> all() const {
    std::vector<CMatrix> v = projectors;
    v.insert(v.end(), g.begin(), g.end());
    v.insert(v.end(), partners.begin(), partners.end());
    return v;
  }
};

inline GeneratorSet su_d_generators(int d, double alpha, const SpaceConfig& cfg,
                                    double min_metric = 4.0) {
  if (d < 2) throw InvalidSpec("su(d) generators need d >= 2");
  if (regime_metric(alpha, d) < min_metric) {
    std::ostringstream msg;
    msg << "regime metric " << regime_metric(alpha, d) << " below " << min_metric;
    throw SeparationViolation(msg.str());
  }
  const CatBasis b = cat_basis(alpha, d, cfg);
  const CMatrix B = b.matrix();
  GeneratorSet gs;
  gs.d = d;
  gs.alpha = alpha;
  for (int nu = 0; nu < d; ++nu) {
    // |alpha e_nu> lies in the DFS exactly, so its cat coordinates suffice.
    const CVector v = B.adjoint() * coherent_state(alpha * root_of_unity(nu, d), cfg);
    gs.projectors.push_back(v * v.adjoint());
  }
  gs.chi = CMatrix::Zero(d, d);
  for (int mu = 0; mu < d; ++mu) gs.chi(mu, mu) = mu;
  auto comm = [](const CMatrix& x, const CMatrix& y) { return CMatrix(x * y - y * x); };
  for (int nu = 0; nu < d; ++nu) {
    for (int nup = 0; nup < d; ++nup) {
      if (nu == nup) continue;
      const auto& pn = gs.projectors[static_cast<std::size_t>(nu)];
      const auto& pm = gs.projectors[static_cast<std::size_t>(nup)];
      const CMatrix g = comm(pn, comm(gs.chi, pm));
      gs.g.push_back(g);
      gs.partners.push_back(0.5 * kI * comm(pn - pm, g));
      gs.pairs.emplace_back(nu, nup);
    }
  }
  return gs;
}

/// Orthogonal-limit prediction for g_{nu nu'}:
/// |a e_nu><a e_nu'| / (e^{-i 2 pi (nu - nu')/d} - 1) + h.c., in cat coordinates.
inline CMatrix g_formula(int nu, int nup, const GeneratorSet& gs, const SpaceConfig& cfg) {
  const int d = gs.d;
  const CatBasis b = cat_basis(gs.alpha, d, cfg);
  const CMatrix B = b.matrix();
  const CVector vn = B.adjoint() * coherent_state(gs.alpha * root_of_unity(nu, d), cfg);
  const CVector vm = B.adjoint() * coherent_state(gs.alpha * root_of_unity(nup, d), cfg);
  const cplx c = 1.0 / (std::polar(1.0, -2.0 * kPi * (nu - nup) / d) - 1.0);
  const CMatrix x = c * vn * vm.adjoint();
  return x + x.adjoint();
}

/// Rank of the traceless parts under the real Hilbert-Schmidt inner product.
inline int hermitian_span_rank(const std::vector<CMatrix>& elems, double rel_tol = 1e-8) {
  if (elems.empty()) return 0;
  std::vector<CMatrix> tl;
  for (const auto& e : elems) {
    const auto d = e.rows();
    tl.push_back(e - (e.trace() / static_cast<double>(d)) * CMatrix::Identity(d, d));
  }
  const auto k = static_cast<Eigen::Index>(tl.size());
  RMatrix G(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      G(i, j) = (tl[static_cast<std::size_t>(i)].adjoint() * tl[static_cast<std::size_t>(j)])
                    .trace()
                    .real();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(G, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  int r = 0;
  for (Eigen::Index i = 0; i < k; ++i)
    if (es.eigenvalues()(i) > rel_tol * top) ++r;
  return r;
}

inline int rank_check(const GeneratorSet& gs) { return hermitian_span_rank(gs.all()); }

inline void write_connection_csv(const std::vector<ConnectionSample>& samples, std::ostream& os) {
  if (samples.empty()) return;
  const auto d = samples.front().value.rows();
  os << "lambda";
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) os << ",re_" << i << j << ",im_" << i << j;
  os << '\n' << std::setprecision(12);
  for (const auto& s : samples) {
    os << s.lambda;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) os << ',' << s.value(i, j).real() << ',' << s.value(i, j).imag();
    os << '\n';
  }
}

}  // namespace holocat
