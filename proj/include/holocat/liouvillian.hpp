#pragma once

// Jump operator, Lindblad generator, time integration and spectral analysis
// of the dissipative dynamics rho' = F rho F^dag - 1/2 {F^dag F, rho}.

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "holocat/fockspace.hpp"
#include "holocat/path.hpp"

namespace holocat {

struct JumpSpec {
  double kappa = 1.0;
  std::vector<cplx> roots;

  int d() const { return static_cast<int>(roots.size()); }

  void validate() const {
    if (roots.empty()) throw InvalidSpec("jump operator needs at least one root");
    if (!(kappa > 0.0)) throw InvalidSpec("kappa must be positive");
  }

  double max_root_modulus() const {
    double m = 0.0;
    for (auto r : roots) m = std::max(m, std::abs(r));
    return m;
  }
};

/// sqrt(kappa) prod_nu (a - alpha_nu) as a band matrix with offsets 0..d.
inline BandMatrix jump_band(std::span<const cplx> roots, double kappa, Eigen::Index n) {
  const int d = static_cast<int>(roots.size());
  // Work with the diagonals of the running product directly: multiplying by
  // (a - alpha) shifts each diagonal up by one and subtracts alpha times it.
  std::vector<CVector> diags(1, CVector::Ones(n));
  for (int k = 0; k < d; ++k) {
    std::vector<CVector> next(diags.size() + 1);
    for (std::size_t o = 0; o < next.size(); ++o)
      next[o] = CVector::Zero(std::max<Eigen::Index>(0, n - static_cast<Eigen::Index>(o)));
    for (std::size_t o = 0; o < next.size(); ++o) {
      auto& out = next[o];
      for (Eigen::Index i = 0; i < out.size(); ++i) {
        cplx v{0.0, 0.0};
        // (a B)(i, i+o) = sqrt(i+1) B(i+1, i+o), i.e. diagonal o-1 at row i+1.
        if (o >= 1) {
          const auto& prev = diags[o - 1];
          if (i + 1 < prev.size())
            v += std::sqrt(static_cast<double>(i + 1)) * prev(i + 1);
        }
        if (o < diags.size() && i < diags[o].size()) v -= roots[static_cast<std::size_t>(k)] * diags[o](i);
        out(i) = v;
      }
    }
    diags = std::move(next);
  }
  BandMatrix f(n, 0, d);
  const double s = std::sqrt(kappa);
  for (int o = 0; o <= d; ++o) f.diag(o) = s * diags[static_cast<std::size_t>(o)];
  return f;
}

inline Operator build_jump(const JumpSpec& spec, const SpaceConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (!truncation_adequate(spec.max_root_modulus(), cfg)) {
    std::ostringstream msg;
    msg << "roots up to |alpha|=" << spec.max_root_modulus() << " need n_trunc >= "
        << adequate_truncation(spec.max_root_modulus());
    throw TruncationError(msg.str());
  }
  return jump_band(spec.roots, spec.kappa, cfg.n_trunc).dense();
}

/// L = conj(F) (x) F - 1/2 (I (x) K + K^T (x) I), K = F^dag F.
inline Superoperator liouvillian_matrix(const Operator& F) {
  if (F.rows() != F.cols()) throw DimensionMismatch("jump operator is not square");
  const Eigen::Index n = F.rows();
  const CMatrix K = F.adjoint() * F;
  const CMatrix I = CMatrix::Identity(n, n);
  return kron(F.conjugate(), F) - 0.5 * (kron(I, K) + kron(K.transpose(), I));
}

/// Direct evaluation of the Lindblad right-hand side.
inline CMatrix lindblad_rhs(const Operator& F, const CMatrix& rho) {
  if (F.rows() != rho.rows() || rho.rows() != rho.cols())
    throw DimensionMismatch("jump operator and density operator sizes differ");
  const CMatrix K = F.adjoint() * F;
  return F * rho * F.adjoint() - 0.5 * (K * rho + rho * K);
}

/// Heisenberg-picture generator L^dag[J] = F^dag J F - 1/2 {K, J}.
inline CMatrix adjoint_lindblad_rhs(const Operator& F, const CMatrix& J) {
  const CMatrix K = F.adjoint() * F;
  return F.adjoint() * J * F - 0.5 * (K * J + J * K);
}

/// Banded generator at a fixed set of roots; applies L in O(d n^2).
class BandedGenerator {
 public:
  BandedGenerator() = default;
  BandedGenerator(std::span<const cplx> roots, double kappa, Eigen::Index n)
      : F_(jump_band(roots, kappa, n)), Fdag_(F_.adjoint()), K_(Fdag_ * F_) {}

  const BandMatrix& F() const { return F_; }
  const BandMatrix& K() const { return K_; }
  CVector k_diagonal() const { return K_.diag(0); }

  /// out = L[rho] - c o rho, where c_ij = -(D_i + D_j)/2 for a given D.
  void apply(const CMatrix& rho, CMatrix& out, CMatrix& scratch,
             const CMatrix* shift = nullptr) const {
    scratch.setZero(rho.rows(), rho.cols());
    F_.apply_left_add(rho, scratch);
    out.setZero(rho.rows(), rho.cols());
    Fdag_.apply_right_add(scratch, out);
    K_.apply_left_add(rho, out, -0.5);
    K_.apply_right_add(rho, out, -0.5);
    if (shift) out -= shift->cwiseProduct(rho);
  }

 private:
  BandMatrix F_;
  BandMatrix Fdag_;
  BandMatrix K_;
};

enum class Integrator { EtdRk4, Rk4 };

inline const char* to_string(Integrator i) {
  return i == Integrator::EtdRk4 ? "etdrk4" : "rk4";
}

struct Schedule {
  double T = 1.0;
  long steps = 0;  // 0 selects recommended_steps()
  int samples = 0;  // sampled points besides t=0; final state always kept
  Integrator integrator = Integrator::EtdRk4;
  bool keep_states = false;
  /// Operators whose expectation values are recorded at each sample.
  std::vector<Operator> observables;
};

struct TrajectorySample {
  double t = 0.0;
  double trace = 1.0;
  double purity = 1.0;
  double tail_weight = 0.0;
  std::vector<cplx> expectations;
  std::optional<DensityOperator> rho;
};

/// Per-run integration diagnostics.
struct EvolveLog {
  Integrator integrator = Integrator::EtdRk4;
  long steps = 0;
  double h = 0.0;
  double max_trace_drift = 0.0;
  double max_hermiticity_residual = 0.0;
  double max_tail_weight = 0.0;
  long corrections = 0;
  double wall_seconds = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  DensityOperator final_state;
  EvolveLog log;
};

/// Largest squared singular value of F restricted to the levels the state
/// can populate, maximized over samples of the path. Explicit schemes on
/// the damping-split problem stay stable for h * this below about 2.3.
inline double low_jump_norm_sq(const ParameterPath& path, double kappa, int n_trunc,
                               int samples = 16) {
  const double rmax = path.max_modulus();
  const int m = std::min(n_trunc, static_cast<int>(std::ceil((rmax + 1.0) * (rmax + 1.0))) +
                                      path.d);
  double worst = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const auto roots = path.roots_at(path.total_T * k / std::max(samples, 1));
    const CMatrix F = jump_band(roots, kappa, n_trunc).dense().leftCols(m);
    worst = std::max(worst, std::pow(spectral_norm(F), 2));
  }
  return worst;
}

inline long recommended_steps(const ParameterPath& path, double kappa, int n_trunc,
                              Integrator integrator) {
  double h = 0.0;
  if (integrator == Integrator::EtdRk4) {
    h = 1.5 / low_jump_norm_sq(path, kappa, n_trunc);
  } else {
    double worst = 0.0;
    for (int k = 0; k <= 16; ++k) {
      const auto roots = path.roots_at(path.total_T * k / 16.0);
      worst = std::max(worst, std::pow(spectral_norm(jump_band(roots, kappa, n_trunc).dense()), 2));
    }
    h = 2.0 / worst;
  }
  return std::max<long>(1, static_cast<long>(std::ceil(path.total_T / h)));
}

namespace detail {

/// phi_1..phi_3 of the exponential integrator, with a Taylor branch near 0.
inline void phi123(double z, double& p1, double& p2, double& p3) {
  if (std::abs(z) < 0.2) {
    // phi_k(z) = sum_j z^j / (j + k)!
    static const auto inv_fact = [] {
      std::array<double, 18> f{};
      f[0] = 1.0;
      for (std::size_t i = 1; i < f.size(); ++i) f[i] = f[i - 1] / static_cast<double>(i);
      return f;
    }();
    double zk = 1.0;
    p1 = p2 = p3 = 0.0;
    for (std::size_t j = 0; j < 14; ++j) {
      p1 += zk * inv_fact[j + 1];
      p2 += zk * inv_fact[j + 2];
      p3 += zk * inv_fact[j + 3];
      zk *= z;
    }
    return;
  }
  const double em1 = std::expm1(z);
  p1 = em1 / z;
  p2 = (em1 - z) / (z * z);
  p3 = (em1 - z - 0.5 * z * z) / (z * z * z);
}

struct EtdCoefficients {
  RMatrix c, E, E2, Q, f1, f2, f3;
};

inline EtdCoefficients etd_coefficients(const RVector& D, double h) {
  const Eigen::Index n = D.size();
  EtdCoefficients k;
  k.c.resize(n, n);
  k.E.resize(n, n);
  k.E2.resize(n, n);
  k.Q.resize(n, n);
  k.f1.resize(n, n);
  k.f2.resize(n, n);
  k.f3.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = -0.5 * (D(i) + D(j));
      const double z = h * c;
      double p1, p2, p3, q1, q2, q3;
      phi123(z, p1, p2, p3);
      phi123(0.5 * z, q1, q2, q3);
      k.c(i, j) = c;
      k.E(i, j) = std::exp(z);
      k.E2(i, j) = std::exp(0.5 * z);
      k.Q(i, j) = 0.5 * h * q1;
      k.f1(i, j) = h * (p1 - 3.0 * p2 + 4.0 * p3);
      k.f2(i, j) = h * (p2 - 2.0 * p3);
      k.f3(i, j) = h * (4.0 * p3 - p2);
    }
  }
  return k;
}

inline double purity(const DensityOperator& rho) {
  return (rho.adjoint().cwiseProduct(rho.transpose())).sum().real();
}

}  // namespace detail

/// Fixed-step integration of the time-dependent Lindblad equation along a
/// path. EtdRk4 treats the Fock-diagonal part of the anticommutator exactly
/// and the rest with a fourth-order exponential Runge-Kutta scheme; Rk4 is
/// the classic explicit method.
inline Trajectory evolve(const DensityOperator& rho0, const ParameterPath& path, double kappa,
                         const SpaceConfig& cfg, Schedule sched) {
  const auto wall0 = std::chrono::steady_clock::now();
  path.validate();
  cfg.validate();
  if (!(kappa > 0.0)) throw InvalidSpec("kappa must be positive");
  const Eigen::Index n = cfg.n_trunc;
  if (rho0.rows() != n || rho0.cols() != n) throw DimensionMismatch("rho0 size != n_trunc");
  if (std::abs(rho0.trace() - 1.0) > 1e-8) throw InvalidSpec("rho0 trace != 1");
  if (hermiticity_residual(rho0) > 1e-10) throw InvalidSpec("rho0 is not Hermitian");
  if (!truncation_adequate(path.max_modulus(), cfg)) {
    std::ostringstream msg;
    msg << "path reaches |alpha|=" << path.max_modulus() << ", needs n_trunc >= "
        << adequate_truncation(path.max_modulus());
    throw TruncationError(msg.str());
  }
  for (const auto& o : sched.observables)
    if (o.rows() != n || o.cols() != n) throw DimensionMismatch("observable size != n_trunc");

  sched.T = path.total_T;
  if (sched.steps <= 0) sched.steps = recommended_steps(path, kappa, cfg.n_trunc, sched.integrator);
  const long steps = sched.steps;
  const double h = sched.T / static_cast<double>(steps);

  Trajectory traj;
  traj.log.integrator = sched.integrator;
  traj.log.steps = steps;
  traj.log.h = h;

  auto record = [&](double t, const DensityOperator& rho) {
    TrajectorySample s;
    s.t = t;
    s.trace = rho.trace().real();
    s.purity = detail::purity(rho);
    s.tail_weight = tail_weight(rho, cfg);
    for (const auto& o : sched.observables) s.expectations.push_back((o * rho).trace());
    if (sched.keep_states) s.rho = rho;
    traj.samples.push_back(std::move(s));
  };

  // Sample step indices: evenly spaced, always including 0 and `steps`.
  std::vector<long> marks;
  if (sched.samples > 0) {
    for (int j = 0; j <= sched.samples; ++j)
      marks.push_back(std::lround(static_cast<double>(j) * steps / sched.samples));
  } else {
    marks = {0, steps};
  }
  std::size_t next_mark = 0;

  DensityOperator y = rho0;
  if (marks[next_mark] == 0) {
    record(0.0, y);
    ++next_mark;
  }

  CMatrix scratch(n, n), nu(n, n), na(n, n), nb(n, n), nc(n, n), a(n, n), b(n, n), c(n, n);
  CMatrix shift(n, n);
  auto gen_at = [&](double t) {
    const auto r = path.roots_at(t);
    return BandedGenerator(r, kappa, n);
  };

  for (long k = 0; k < steps; ++k) {
    const double t = k * h;
    const BandedGenerator g0 = gen_at(t);
    const BandedGenerator gm = gen_at(t + 0.5 * h);
    const BandedGenerator g1 = gen_at(t + h);
    const double tr0 = y.trace().real();

    if (sched.integrator == Integrator::EtdRk4) {
      const RVector D = gm.k_diagonal().real();
      const auto co = detail::etd_coefficients(D, h);
      shift = co.c.cast<cplx>();
      g0.apply(y, nu, scratch, &shift);
      a = co.E2.cwiseProduct(y) + co.Q.cwiseProduct(nu);
      gm.apply(a, na, scratch, &shift);
      b = co.E2.cwiseProduct(y) + co.Q.cwiseProduct(na);
      gm.apply(b, nb, scratch, &shift);
      c = co.E2.cwiseProduct(a) + co.Q.cwiseProduct(2.0 * nb - nu);
      g1.apply(c, nc, scratch, &shift);
      y = co.E.cwiseProduct(y) + co.f1.cwiseProduct(nu) + 2.0 * co.f2.cwiseProduct(na + nb) +
          co.f3.cwiseProduct(nc);
    } else {
      g0.apply(y, nu, scratch);
      a = y + 0.5 * h * nu;
      gm.apply(a, na, scratch);
      b = y + 0.5 * h * na;
      gm.apply(b, nb, scratch);
      c = y + h * nb;
      g1.apply(c, nc, scratch);
      y += (h / 6.0) * (nu + 2.0 * na + 2.0 * nb + nc);
    }

    if (!y.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state at t=" << t + h << " (h=" << h << ")";
      throw StepUnstable(msg.str());
    }
    const double drift = std::abs(y.trace().real() - tr0);
    traj.log.max_trace_drift = std::max(traj.log.max_trace_drift, drift);
    if (drift > 1e-4) {
      std::ostringstream msg;
      msg << "trace drift " << drift << " at t=" << t + h << " (h=" << h << ")";
      throw StepUnstable(msg.str());
    }
    traj.log.max_hermiticity_residual =
        std::max(traj.log.max_hermiticity_residual, hermiticity_residual(y));
    y = 0.5 * (y + y.adjoint()).eval();
    y /= y.trace().real();
    ++traj.log.corrections;
    // ||rho||_F <= 1 for any density operator.
    if (const double fro = y.norm(); fro > 1.0 + 1e-3) {
      std::ostringstream msg;
      msg << "state norm " << fro << " exceeds 1 at t=" << t + h << " (h=" << h << ")";
      throw StepUnstable(msg.str());
    }

    const double tail = tail_weight(y, cfg);
    traj.log.max_tail_weight = std::max(traj.log.max_tail_weight, tail);
    if (tail > cfg.tail_tol) {
      std::ostringstream msg;
      msg << "tail weight " << tail << " exceeds " << cfg.tail_tol << " at t=" << t + h;
      throw TruncationError(msg.str());
    }
    while (next_mark < marks.size() && marks[next_mark] == k + 1) {
      record((k + 1) * h, y);
      ++next_mark;
    }
  }
  traj.final_state = y;
  traj.log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return traj;
}

/// Convenience overload for a static jump operator held for time T.
inline Trajectory evolve(const DensityOperator& rho0, const JumpSpec& spec, const SpaceConfig& cfg,
                         Schedule sched) {
  spec.validate();
  return evolve(rho0, ParameterPath::constant(spec.roots, sched.T), spec.kappa, cfg,
                std::move(sched));
}

// ---------------------------------------------------------------------------
// Spectral analysis. L maps Hermitian operators to Hermitian operators, so
// in an orthonormal Hermitian operator basis it is a real matrix; all
// decompositions run on that real representation.

/// Truncation for spectral work. At the bare adequacy rule the truncated
/// jump has no exact kernel and the steady cluster sits near 1e-5 kappa;
/// ten further levels push it below 1e-10 kappa.
inline int spectral_truncation(double max_abs_alpha) {
  return adequate_truncation(max_abs_alpha) + 10;
}

/// Real coordinates of a Hermitian matrix in the basis E_ii,
/// (E_ij + E_ji)/sqrt2, i(E_ij - E_ji)/sqrt2 (i < j), in that order per
/// column-major position.
class HermitianBasis {
 public:
  explicit HermitianBasis(Eigen::Index n) : n_(n) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) {
        if (i == j) {
          elems_.push_back({i, j, 0});
        } else {
          elems_.push_back({i, j, 1});
          elems_.push_back({i, j, 2});
        }
      }
    }
  }

  Eigen::Index n() const { return n_; }
  Eigen::Index dim() const { return n_ * n_; }

  CMatrix element(Eigen::Index k) const {
    CMatrix m = CMatrix::Zero(n_, n_);
    const auto& e = elems_[static_cast<std::size_t>(k)];
    const double s = 1.0 / std::sqrt(2.0);
    if (e.kind == 0) {
      m(e.i, e.i) = 1.0;
    } else if (e.kind == 1) {
      m(e.i, e.j) = s;
      m(e.j, e.i) = s;
    } else {
      m(e.i, e.j) = kI * s;
      m(e.j, e.i) = -kI * s;
    }
    return m;
  }

  /// x_k = Tr(B_k X) for any (not necessarily Hermitian) X; complex in general.
  CVector coords(const CMatrix& X) const {
    CVector x(dim());
    const double r2 = std::sqrt(2.0);
    for (std::size_t k = 0; k < elems_.size(); ++k) {
      const auto& e = elems_[k];
      const auto idx = static_cast<Eigen::Index>(k);
      if (e.kind == 0) x(idx) = X(e.i, e.i);
      else if (e.kind == 1) x(idx) = (X(e.i, e.j) + X(e.j, e.i)) / r2;
      else x(idx) = kI * (X(e.j, e.i) - X(e.i, e.j)) / r2;
    }
    return x;
  }

  /// Inverse of coords: X = sum_k x_k B_k.
  CMatrix matrix(const CVector& x) const {
    CMatrix m = CMatrix::Zero(n_, n_);
    const double s = 1.0 / std::sqrt(2.0);
    for (std::size_t k = 0; k < elems_.size(); ++k) {
      const auto& e = elems_[k];
      const cplx v = x(static_cast<Eigen::Index>(k));
      if (e.kind == 0) {
        m(e.i, e.i) += v;
      } else if (e.kind == 1) {
        m(e.i, e.j) += v * s;
        m(e.j, e.i) += v * s;
      } else {
        m(e.i, e.j) += kI * v * s;
        m(e.j, e.i) -= kI * v * s;
      }
    }
    return m;
  }

 private:
  struct Elem {
    Eigen::Index i, j;
    int kind;
  };
  Eigen::Index n_;
  std::vector<Elem> elems_;
};

/// Real matrix R_kl = Tr(B_k L[B_l]) of a vectorized superoperator.
inline RMatrix hermitian_representation(const Superoperator& L) {
  const auto N = L.rows();
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(N))));
  if (L.cols() != N || n * n != N) throw DimensionMismatch("superoperator is not n^2 x n^2");
  const HermitianBasis hb(n);
  RMatrix R(N, N);
  for (Eigen::Index l = 0; l < N; ++l) {
    const CVector col = L * vectorize(hb.element(l));
    const CVector x = hb.coords(unvectorize(col, n));
    R.col(l) = x.real();
  }
  return R;
}

/// Same matrix built straight from F without forming the superoperator.
inline RMatrix hermitian_representation_from_jump(const Operator& F) {
  const auto n = F.rows();
  const HermitianBasis hb(n);
  RMatrix R(n * n, n * n);
  for (Eigen::Index l = 0; l < n * n; ++l) R.col(l) = hb.coords(lindblad_rhs(F, hb.element(l))).real();
  return R;
}

/// Eigenvalues sorted by decreasing real part.
inline std::vector<cplx> liouvillian_spectrum(const RMatrix& R) {
  Eigen::EigenSolver<RMatrix> es(R, false);
  if (es.info() != Eigen::Success) throw IllConditioned("Liouvillian eigensolver failed");
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + R.rows());
  std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return ev;
}

inline std::vector<cplx> liouvillian_spectrum(const Superoperator& L) {
  return liouvillian_spectrum(hermitian_representation(L));
}

/// Splits a spectrum into the cluster |lambda| < tol*kappa and the rest.
struct NullCluster {
  int dimension = 0;
  double null_bound = 0.0;   // largest |lambda| inside the cluster
  double next_modulus = std::numeric_limits<double>::infinity();  // smallest outside
  double gap = std::numeric_limits<double>::infinity();  // -max Re over the rest
};

inline NullCluster null_cluster(const std::vector<cplx>& spectrum, double kappa, double tol) {
  NullCluster nc;
  nc.gap = std::numeric_limits<double>::infinity();
  for (auto l : spectrum) {
    const double m = std::abs(l);
    if (m < tol * kappa) {
      ++nc.dimension;
      nc.null_bound = std::max(nc.null_bound, m);
    } else {
      nc.next_modulus = std::min(nc.next_modulus, m);
      nc.gap = std::min(nc.gap, -l.real());
    }
  }
  return nc;
}

struct SteadySpace {
  int dimension = 0;
  std::vector<DensityOperator> basis;  // Hermitian, orthonormal in Hilbert-Schmidt
  NullCluster cluster;
  std::vector<cplx> spectrum;
};

inline void check_separation(const NullCluster& nc, double kappa, double tol) {
  if (nc.dimension == 0) throw IllConditioned("no eigenvalues inside the null cluster");
  if (nc.next_modulus < 10.0 * tol * kappa) {
    std::ostringstream msg;
    msg << "null cluster not separated: next |lambda|=" << nc.next_modulus
        << " < 10*tol*kappa=" << 10.0 * tol * kappa;
    throw IllConditioned(msg.str());
  }
}

/// Right null space of L. Basis matrices come from the trailing right
/// singular vectors of the real representation.
inline SteadySpace steady_space_real(const RMatrix& R, double kappa, double tol = 1e-7) {
  SteadySpace ss;
  ss.spectrum = liouvillian_spectrum(R);
  ss.cluster = null_cluster(ss.spectrum, kappa, tol);
  check_separation(ss.cluster, kappa, tol);
  ss.dimension = ss.cluster.dimension;
  Eigen::BDCSVD<RMatrix> svd(R, Eigen::ComputeFullV);
  const auto N = R.cols();
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(N))));
  const HermitianBasis hb(n);
  for (int k = 0; k < ss.dimension; ++k)
    ss.basis.push_back(hb.matrix(svd.matrixV().col(N - 1 - k).cast<cplx>()));
  return ss;
}

inline SteadySpace steady_space(const Superoperator& L, double kappa, double tol = 1e-7) {
  return steady_space_real(hermitian_representation(L), kappa, tol);
}

/// Gap in units of kappa: -max Re(lambda) outside the null cluster.
inline double dissipation_gap(const std::vector<cplx>& spectrum, double kappa, double tol = 1e-7) {
  const NullCluster nc = null_cluster(spectrum, kappa, tol);
  check_separation(nc, kappa, tol);
  if (!std::isfinite(nc.gap)) throw IllConditioned("spectrum has no eigenvalues outside the null cluster");
  if (nc.gap < 10.0 * tol * kappa) throw IllConditioned("gap cluster overlaps the null cluster");
  return nc.gap / kappa;
}

inline double dissipation_gap(const Superoperator& L, double kappa, double tol = 1e-7) {
  return dissipation_gap(liouvillian_spectrum(L), kappa, tol);
}

struct ConservedQuantity {
  int mu = 0;
  int mu_prime = 0;
  Operator matrix;
  double adjoint_residual = 0.0;  // ||L^dag[J]|| / ||J||
};

/// Left null space of L paired against |sigma><sigma'| built from the
/// given orthonormal steady kets, so Tr[J_{mu mu'}^dag |s><s'|] = delta.
inline std::vector<ConservedQuantity> conserved_quantities_real(
    const RMatrix& R, const Operator& F, double kappa, std::span<const StateVector> dfs,
    double tol = 1e-7) {
  const int d = static_cast<int>(dfs.size());
  const auto N = R.rows();
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(N))));
  const auto spectrum = liouvillian_spectrum(R);
  const NullCluster nc = null_cluster(spectrum, kappa, tol);
  check_separation(nc, kappa, tol);
  if (nc.dimension != d * d) {
    std::ostringstream msg;
    msg << "steady space has dimension " << nc.dimension << ", expected " << d * d;
    throw InvalidSpec(msg.str());
  }
  // Left null vectors of R are right null vectors of R^T; coordinates map
  // back to Hermitian operators since the basis is self-dual.
  Eigen::BDCSVD<RMatrix> svd(R.transpose(), Eigen::ComputeFullV);
  const HermitianBasis hb(n);
  std::vector<CMatrix> raw;
  for (int k = 0; k < d * d; ++k) raw.push_back(hb.matrix(svd.matrixV().col(N - 1 - k).cast<cplx>()));

  // G_lk = Tr(J_l^dag B_k), B_k = |s><s'| with k = s*d + s'.
  CMatrix G(d * d, d * d);
  for (int l = 0; l < d * d; ++l)
    for (int s = 0; s < d; ++s)
      for (int sp = 0; sp < d; ++sp)
        G(l, s * d + sp) = dfs[static_cast<std::size_t>(sp)].dot(
            raw[static_cast<std::size_t>(l)].adjoint() * dfs[static_cast<std::size_t>(s)]);
  Eigen::JacobiSVD<CMatrix> gs(G);
  const double cond_inv = gs.singularValues().minCoeff() / gs.singularValues().maxCoeff();
  if (cond_inv < 1e-8) throw IllConditioned("dual pairing matrix is singular");
  const CMatrix C = G.inverse().adjoint();

  std::vector<ConservedQuantity> out;
  for (int m = 0; m < d; ++m) {
    for (int mp = 0; mp < d; ++mp) {
      ConservedQuantity q;
      q.mu = m;
      q.mu_prime = mp;
      q.matrix = CMatrix::Zero(n, n);
      for (int l = 0; l < d * d; ++l) q.matrix += C(l, m * d + mp) * raw[static_cast<std::size_t>(l)];
      q.adjoint_residual = adjoint_lindblad_rhs(F, q.matrix).norm() / q.matrix.norm();
      out.push_back(std::move(q));
    }
  }
  return out;
}

inline std::vector<ConservedQuantity> conserved_quantities(const Operator& F, double kappa,
                                                           std::span<const StateVector> dfs,
                                                           double tol = 1e-7) {
  return conserved_quantities_real(hermitian_representation_from_jump(F), F, kappa, dfs, tol);
}

// ---------------------------------------------------------------------------
// Exports.

inline void write_trajectory_csv(const Trajectory& tr, std::ostream& os,
                                 const std::vector<std::string>& names = {}) {
  os << "t,trace,purity,tail_weight";
  const std::size_t nobs = tr.samples.empty() ? 0 : tr.samples.front().expectations.size();
  for (std::size_t k = 0; k < nobs; ++k) {
    const std::string name = k < names.size() ? names[k] : "obs" + std::to_string(k);
    os << ',' << name << "_re," << name << "_im";
  }
  os << '\n' << std::setprecision(12);
  for (const auto& s : tr.samples) {
    os << s.t << ',' << s.trace << ',' << s.purity << ',' << s.tail_weight;
    for (auto e : s.expectations) os << ',' << e.real() << ',' << e.imag();
    os << '\n';
  }
}

inline void write_spectrum_csv(const std::vector<cplx>& spectrum, std::ostream& os) {
  os << "re,im\n" << std::setprecision(12);
  for (auto l : spectrum) os << l.real() << ',' << l.imag() << '\n';
}

}  // namespace holocat
