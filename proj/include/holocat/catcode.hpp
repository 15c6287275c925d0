#pragma once

// Cat-state bases, number projectors, DFS projectors and displaced cats.

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "holocat/fockspace.hpp"

namespace holocat {

/// Pi_mu = sum_n |d n + mu><d n + mu|.
inline Operator number_projector(int mu, int d, const SpaceConfig& cfg) {
  cfg.validate();
  if (d < 1 || mu < 0 || mu >= d) throw InvalidSpec("number projector needs 0 <= mu < d");
  Operator p = Operator::Zero(cfg.n_trunc, cfg.n_trunc);
  for (int k = mu; k < cfg.n_trunc; k += d) p(k, k) = 1.0;
  return p;
}

/// Normalized Pi_mu |alpha>. At alpha = 0 only mu = 0 is defined; the
/// alpha -> 0 limit of the other states is the Fock state |mu>.
inline StateVector cat_state(int mu, cplx alpha, int d, const SpaceConfig& cfg) {
  cfg.validate();
  if (d < 1 || mu < 0 || mu >= d) throw InvalidSpec("cat state needs 0 <= mu < d");
  if (mu >= cfg.n_trunc) throw InvalidSpec("cat index outside truncation");
  if (alpha == cplx{0.0, 0.0}) {
    if (mu > 0) throw DegenerateInput("Pi_mu|0> vanishes for mu > 0; use the Fock state |mu>");
    return fock_state(0, cfg);
  }
  const StateVector coh = coherent_state(alpha, cfg);
  StateVector v = StateVector::Zero(cfg.n_trunc);
  for (int k = mu; k < cfg.n_trunc; k += d) v(k) = coh(k);
  const double nrm = v.norm();
  if (nrm < 1e-12) throw DegenerateInput("projected coherent state has vanishing norm");
  return v / nrm;
}

/// Closed-form d = 2 cats (|a> + (-1)^mu |-a>) / (2 N_mu) with
/// N_mu = sqrt((1 + (-1)^mu e^{-2|a|^2}) / 2).
inline StateVector two_cat_closed_form(int mu, cplx alpha, int n_trunc) {
  const double N = std::sqrt(0.5 * (1.0 + (mu == 0 ? 1.0 : -1.0) * std::exp(-2.0 * std::norm(alpha))));
  const StateVector c = coherent_amplitudes(alpha, n_trunc);
  StateVector v = StateVector::Zero(n_trunc);
  for (int k = mu; k < n_trunc; k += 2) v(k) = c(k) / N;
  return v;
}

inline double two_cat_normalization(int mu, double abs_alpha) {
  return std::sqrt(0.5 * (1.0 + (mu == 0 ? 1.0 : -1.0) * std::exp(-2.0 * abs_alpha * abs_alpha)));
}

/// e_nu = exp(i 2 pi nu / d).
inline cplx root_of_unity(int nu, int d) { return std::polar(1.0, 2.0 * kPi * nu / d); }

struct CatBasis {
  int d = 0;
  cplx alpha{};
  cplx gamma{};  // displacement of the root configuration
  std::vector<StateVector> states;
  std::vector<cplx> roots;
  double regime_metric = 0.0;  // 2 |alpha| sin(pi / d)

  Eigen::Index dim() const { return states.empty() ? 0 : states.front().size(); }

  /// Columns are the basis kets.
  CMatrix matrix() const {
    CMatrix m(dim(), d);
    for (int k = 0; k < d; ++k) m.col(k) = states[static_cast<std::size_t>(k)];
    return m;
  }

  bool well_separated(double threshold = 4.0) const { return regime_metric >= threshold; }
};

inline double regime_metric(double abs_alpha, int d) {
  return d == 1 ? std::numeric_limits<double>::infinity() : 2.0 * abs_alpha * std::sin(kPi / d);
}

/// Symmetric cat basis |mu_alpha>, optionally displaced by gamma. At
/// alpha = 0 the Fock limit |mu> is used.
inline CatBasis cat_basis(cplx alpha, int d, const SpaceConfig& cfg, cplx gamma = {}) {
  cfg.validate();
  if (d < 1) throw InvalidSpec("d must be >= 1");
  if (d > cfg.n_trunc) throw InvalidSpec("d exceeds truncation");
  CatBasis b;
  b.d = d;
  b.alpha = alpha;
  b.gamma = gamma;
  b.regime_metric = regime_metric(std::abs(alpha), d);
  const bool displaced = gamma != cplx{0.0, 0.0};
  Operator D;
  if (displaced) {
    if (!truncation_adequate(std::abs(gamma) + std::abs(alpha), cfg))
      throw TruncationError("displaced cat basis beyond truncation adequacy");
    D = displacement(gamma, cfg);
  }
  for (int mu = 0; mu < d; ++mu) {
    StateVector v = alpha == cplx{0.0, 0.0} ? fock_state(mu, cfg) : cat_state(mu, alpha, d, cfg);
    if (displaced) {
      v = D * v;
      v.normalize();
    }
    b.states.push_back(v);
  }
  for (int nu = 0; nu < d; ++nu) b.roots.push_back(gamma + alpha * root_of_unity(nu, d));
  return b;
}

/// P = sum_mu |mu_alpha><mu_alpha|.
inline Operator dfs_projector(const CatBasis& b) {
  const CMatrix m = b.matrix();
  return m * m.adjoint();
}

/// Worst overlap deficit 1 - |<mu_alpha| d^{-1/2} sum_nu e^{-i2pi mu nu/d} |alpha e_nu>|.
inline double fourier_relation_check(cplx alpha, int d, const SpaceConfig& cfg) {
  double worst = 0.0;
  std::vector<StateVector> coh;
  for (int nu = 0; nu < d; ++nu) coh.push_back(coherent_state(alpha * root_of_unity(nu, d), cfg));
  for (int mu = 0; mu < d; ++mu) {
    StateVector sum = StateVector::Zero(cfg.n_trunc);
    for (int nu = 0; nu < d; ++nu)
      sum += std::polar(1.0, -2.0 * kPi * mu * nu / d) * coh[static_cast<std::size_t>(nu)];
    sum /= std::sqrt(static_cast<double>(d));
    const StateVector cat = cat_state(mu, alpha, d, cfg);
    worst = std::max(worst, 1.0 - std::abs(cat.dot(sum)));
  }
  return worst;
}

/// Unitary W with W_{mu nu} = e^{i 2 pi mu nu / d} / sqrt d. Its columns are
/// the cat-basis coordinates of the Lowdin-orthonormalized coherent states
/// |alpha e_nu>, so M_coherent = W^dag M_cat W.
inline CMatrix fourier_matrix(int d) {
  CMatrix w(d, d);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu)
      w(mu, nu) = std::polar(1.0 / std::sqrt(static_cast<double>(d)), 2.0 * kPi * mu * nu / d);
  return w;
}

inline CMatrix cat_to_coherent(const CMatrix& m_cat) {
  const CMatrix w = fourier_matrix(static_cast<int>(m_cat.rows()));
  return w.adjoint() * m_cat * w;
}

inline CMatrix coherent_to_cat(const CMatrix& m_coh) {
  const CMatrix w = fourier_matrix(static_cast<int>(m_coh.rows()));
  return w * m_coh * w.adjoint();
}

/// Symmetric (Lowdin) orthonormalization of a set of kets: V (V^dag V)^{-1/2}.
inline std::vector<StateVector> lowdin_orthonormalize(const std::vector<StateVector>& kets) {
  if (kets.empty()) return {};
  const auto k = static_cast<Eigen::Index>(kets.size());
  CMatrix v(kets.front().size(), k);
  for (Eigen::Index j = 0; j < k; ++j) v.col(j) = kets[static_cast<std::size_t>(j)];
  Eigen::SelfAdjointEigenSolver<CMatrix> es(v.adjoint() * v);
  if (es.eigenvalues().minCoeff() < 1e-12) throw IllConditioned("kets are linearly dependent");
  const CMatrix inv_sqrt = es.eigenvectors() *
                           es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                           es.eigenvectors().adjoint();
  const CMatrix q = v * inv_sqrt;
  std::vector<StateVector> out;
  for (Eigen::Index j = 0; j < k; ++j) out.push_back(q.col(j));
  return out;
}

/// Orthonormal basis of span{|alpha_nu>} for arbitrary roots (Gram-Schmidt
/// in root order). The gauge is fixed only up to this ordering.
inline std::vector<StateVector> coherent_span_basis(const std::vector<cplx>& roots,
                                                    const SpaceConfig& cfg) {
  std::vector<StateVector> out;
  for (auto r : roots) {
    StateVector v = coherent_state(r, cfg);
    for (const auto& q : out) v -= q.dot(v) * q;
    const double nrm = v.norm();
    if (nrm < 1e-8) throw IllConditioned("coherent states at the roots are nearly dependent");
    out.push_back(v / nrm);
  }
  return out;
}

/// D_gamma |mu_alpha> for the d = 2 code with roots gamma +- alpha.
inline StateVector displaced_cat(cplx gamma, cplx alpha, int mu, const SpaceConfig& cfg) {
  if (mu != 0 && mu != 1) throw InvalidSpec("displaced cats are defined for mu in {0, 1}");
  if (!truncation_adequate(std::abs(gamma) + std::abs(alpha), cfg)) {
    std::ostringstream msg;
    msg << "|gamma|+|alpha|=" << std::abs(gamma) + std::abs(alpha) << " needs n_trunc >= "
        << adequate_truncation(std::abs(gamma) + std::abs(alpha));
    throw TruncationError(msg.str());
  }
  StateVector c = alpha == cplx{0.0, 0.0} ? fock_state(mu, cfg) : cat_state(mu, alpha, 2, cfg);
  if (gamma == cplx{0.0, 0.0}) return c;
  StateVector v = displacement(gamma, cfg) * c;
  return v / v.norm();
}

/// Large-|alpha| form (|a1> + (-1)^mu e^{i Im(a1 conj(a2))} |a2>)/sqrt2 with
/// a1 = gamma + alpha, a2 = gamma - alpha.
inline StateVector displaced_cat_asymptotic(cplx gamma, cplx alpha, int mu, const SpaceConfig& cfg) {
  const cplx a1 = gamma + alpha;
  const cplx a2 = gamma - alpha;
  const double sgn = mu == 0 ? 1.0 : -1.0;
  StateVector v = coherent_state(a1, cfg) +
                  sgn * std::polar(1.0, std::imag(a1 * std::conj(a2))) * coherent_state(a2, cfg);
  return v / std::sqrt(2.0);
}

}  // namespace holocat
