#pragma once

// Truncated single-mode Fock space: ladder operators, coherent states,
// displacement and rotation operators, and the Wigner function.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "holocat/linalg.hpp"

namespace holocat {

/// Truncation settings: levels |0> .. |n_trunc - 1>.
struct SpaceConfig {
  int n_trunc = 40;
  /// Largest admissible probability on the top 10% of levels.
  double tail_tol = 1e-5;

  SpaceConfig() = default;
  explicit SpaceConfig(int n, double tol = 1e-5) : n_trunc(n), tail_tol(tol) {
    validate();
  }

  void validate() const {
    if (n_trunc < 2) throw InvalidSpec("n_trunc must be >= 2");
    if (!(tail_tol >= 0.0)) throw InvalidSpec("tail_tol must be nonnegative");
  }

  /// First level counted as "tail": ceil(0.9 n_trunc).
  int tail_start() const {
    return static_cast<int>(std::ceil(0.9 * n_trunc - 1e-12));
  }
};

/// Smallest truncation the adequacy rule n >= |a|^2 + 5|a| + 5 accepts.
inline int adequate_truncation(double max_abs_alpha) {
  const double r = std::abs(max_abs_alpha);
  return std::max(2, static_cast<int>(std::ceil(r * r + 5.0 * r + 5.0 - 1e-9)));
}

inline bool truncation_adequate(double max_abs_alpha, const SpaceConfig& cfg) {
  return adequate_truncation(max_abs_alpha) <= cfg.n_trunc;
}

inline double tail_weight(const StateVector& psi, const SpaceConfig& cfg) {
  const int start = cfg.tail_start();
  if (start >= psi.size()) return 0.0;
  return psi.tail(psi.size() - start).squaredNorm();
}

inline double tail_weight(const DensityOperator& rho, const SpaceConfig& cfg) {
  const int start = cfg.tail_start();
  if (start >= rho.rows()) return 0.0;
  return rho.diagonal().tail(rho.rows() - start).real().sum();
}

struct LadderOperators {
  Operator a;
  Operator a_dagger;
  Operator n;
};

inline Operator annihilation(int n_trunc) {
  Operator a = Operator::Zero(n_trunc, n_trunc);
  for (int k = 1; k < n_trunc; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

inline LadderOperators ladder_operators(const SpaceConfig& cfg) {
  cfg.validate();
  LadderOperators ops;
  ops.a = annihilation(cfg.n_trunc);
  ops.a_dagger = ops.a.adjoint();
  ops.n = Operator::Zero(cfg.n_trunc, cfg.n_trunc);
  for (int k = 0; k < cfg.n_trunc; ++k) ops.n(k, k) = static_cast<double>(k);
  return ops;
}

inline StateVector fock_state(int level, const SpaceConfig& cfg) {
  if (level < 0 || level >= cfg.n_trunc) throw InvalidSpec("Fock level outside truncation");
  StateVector v = StateVector::Zero(cfg.n_trunc);
  v(level) = 1.0;
  return v;
}

/// Unnormalized coherent amplitudes exp(-|a|^2/2) a^n / sqrt(n!) built by
/// the recurrence c_{n+1} = c_n a / sqrt(n + 1).
inline StateVector coherent_amplitudes(cplx alpha, int n_trunc) {
  StateVector c(n_trunc);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int k = 1; k < n_trunc; ++k) c(k) = c(k - 1) * alpha / std::sqrt(static_cast<double>(k));
  return c;
}

inline StateVector coherent_state(cplx alpha, const SpaceConfig& cfg) {
  cfg.validate();
  if (!truncation_adequate(std::abs(alpha), cfg)) {
    std::ostringstream msg;
    msg << "coherent state |" << alpha << "> needs n_trunc >= "
        << adequate_truncation(std::abs(alpha)) << ", have " << cfg.n_trunc;
    throw TruncationError(msg.str());
  }
  StateVector c = coherent_amplitudes(alpha, cfg.n_trunc);
  c /= c.norm();
  if (const double tail = tail_weight(c, cfg); tail > cfg.tail_tol) {
    std::ostringstream msg;
    msg << "coherent state tail weight " << tail << " exceeds " << cfg.tail_tol;
    throw TruncationError(msg.str());
  }
  return c;
}

/// Diagonal rotation R_phi = exp(i phi n).
inline Operator rotation(double phi, const SpaceConfig& cfg) {
  cfg.validate();
  Operator r = Operator::Zero(cfg.n_trunc, cfg.n_trunc);
  for (int k = 0; k < cfg.n_trunc; ++k) r(k, k) = std::polar(1.0, phi * k);
  return r;
}

/// D_gamma = exp(gamma a^dag - conj(gamma) a). The exponential is taken in
/// a padded space and cropped so the low-lying block is unaffected by the
/// truncation edge.
inline Operator displacement(cplx gamma, const SpaceConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_trunc;
  if (gamma == cplx{0.0, 0.0}) return Operator::Identity(n, n);
  const int pad = std::max(n, adequate_truncation(std::abs(gamma)) + 20);
  const int big = n + pad;
  const Operator a = annihilation(big);
  const Operator gen = gamma * a.adjoint() - std::conj(gamma) * a;
  Operator d = expm(gen).topLeftCorner(n, n);
  if (truncation_adequate(std::abs(gamma), cfg)) {
    const StateVector col = d.col(0);
    const StateVector ref = coherent_amplitudes(gamma, n).normalized();
    if ((col - ref).norm() > 1e-6) {
      throw TruncationError("displacement column D|0> deviates from |gamma>");
    }
  } else {
    throw TruncationError("displacement amplitude beyond truncation adequacy");
  }
  return d;
}

/// Matrix element <m|D(gamma)|k> from the associated-Laguerre closed form.
inline cplx displacement_element(int m, int k, cplx gamma) {
  const double x = std::norm(gamma);
  if (x == 0.0) return m == k ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
  const int lo = std::min(m, k);
  const int diff = std::abs(m - k);
  const double logmag = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(lo + diff + 1.0)) +
                        diff * 0.5 * std::log(x) - 0.5 * x;
  const double lag = std::assoc_laguerre(static_cast<unsigned>(lo),
                                         static_cast<unsigned>(diff), x);
  const cplx dir = m >= k ? gamma / std::abs(gamma) : -std::conj(gamma) / std::abs(gamma);
  return std::exp(logmag) * lag * std::pow(dir, diff);
}

/// Rectangular phase-space lattice; X = Re(beta), P = Im(beta).
struct PhaseSpaceGrid {
  double x_min = -3.0, x_max = 3.0;
  double p_min = -3.0, p_max = 3.0;
  int nx = 61, np = 61;

  double x(int i) const { return nx == 1 ? x_min : x_min + (x_max - x_min) * i / (nx - 1); }
  double p(int j) const { return np == 1 ? p_min : p_min + (p_max - p_min) * j / (np - 1); }
  double max_radius() const {
    const double mx = std::max(std::abs(x_min), std::abs(x_max));
    const double mp = std::max(std::abs(p_min), std::abs(p_max));
    return std::hypot(mx, mp);
  }
};

/// W(x, p) sampled on the grid; values(i, j) at (x(i), p(j)).
struct WignerGrid {
  PhaseSpaceGrid grid;
  RMatrix values;
  double max_imag_residue = 0.0;
};

/// W(beta) = (2/pi) Tr[rho D_beta Pi D_beta^dag] = (2/pi) Tr[rho D_{2 beta} Pi].
inline WignerGrid wigner(const DensityOperator& rho, const PhaseSpaceGrid& grid) {
  const auto n = static_cast<int>(rho.rows());
  if (rho.cols() != n) throw DimensionMismatch("density operator is not square");
  if (std::abs(rho.trace() - 1.0) > 1e-6) throw InvalidSpec("rho is not trace-normalized");
  if (grid.nx < 1 || grid.np < 1) throw InvalidSpec("empty Wigner grid");
  const double reliable = std::sqrt(static_cast<double>(n)) / 2.0;
  if (grid.max_radius() > reliable + 1e-12) {
    std::ostringstream msg;
    msg << "grid radius " << grid.max_radius() << " exceeds reliable radius " << reliable;
    throw TruncationError(msg.str());
  }
  WignerGrid out{grid, RMatrix::Zero(grid.nx, grid.np), 0.0};
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.np; ++j) {
      const cplx g = 2.0 * cplx{grid.x(i), grid.p(j)};
      cplx acc{0.0, 0.0};
      for (int k = 0; k < n; ++k) {
        const double parity = (k % 2 == 0) ? 1.0 : -1.0;
        for (int m = 0; m < n; ++m) {
          if (rho(k, m) == cplx{0.0, 0.0}) continue;
          acc += rho(k, m) * parity * displacement_element(m, k, g);
        }
      }
      acc *= 2.0 / kPi;
      out.values(i, j) = acc.real();
      out.max_imag_residue = std::max(out.max_imag_residue, std::abs(acc.imag()));
    }
  }
  return out;
}

/// Riemann-sum integral of W over the grid.
inline double wigner_integral(const WignerGrid& w) {
  const double dx = w.grid.nx > 1 ? (w.grid.x_max - w.grid.x_min) / (w.grid.nx - 1) : 1.0;
  const double dp = w.grid.np > 1 ? (w.grid.p_max - w.grid.p_min) / (w.grid.np - 1) : 1.0;
  return w.values.sum() * dx * dp;
}

inline void write_wigner_csv(const WignerGrid& w, std::ostream& os) {
  os << "x,p,w\n" << std::setprecision(12);
  for (int i = 0; i < w.grid.nx; ++i)
    for (int j = 0; j < w.grid.np; ++j)
      os << w.grid.x(i) << ',' << w.grid.p(j) << ',' << w.values(i, j) << '\n';
}

/// 8-bit binary PGM, P axis pointing up; min/max recorded in a comment.
inline void write_wigner_pgm(const WignerGrid& w, std::ostream& os) {
  const double lo = w.values.minCoeff();
  const double hi = w.values.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  os << "P5\n" << std::setprecision(12) << "# wigner min=" << lo << " max=" << hi << "\n"
     << w.grid.nx << ' ' << w.grid.np << "\n255\n";
  for (int j = w.grid.np - 1; j >= 0; --j) {
    for (int i = 0; i < w.grid.nx; ++i) {
      const double s = (w.values(i, j) - lo) / span;
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * s))));
    }
  }
}

/// Amplitude dump: n, Re c_n, Im c_n.
inline void write_amplitudes_csv(const StateVector& psi, std::ostream& os) {
  os << "n,re,im\n" << std::setprecision(12);
  for (Eigen::Index k = 0; k < psi.size(); ++k)
    os << k << ',' << psi(k).real() << ',' << psi(k).imag() << '\n';
}

}  // namespace holocat
