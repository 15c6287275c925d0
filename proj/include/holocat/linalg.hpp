#pragma once

// Dense complex linear-algebra vocabulary shared by every module, plus a
// small band-matrix type used on the integrator hot path.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "holocat/errors.hpp"

namespace holocat {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Kets over the truncated Fock space.
using StateVector = CVector;
/// Linear operators on the truncated Fock space.
using Operator = CMatrix;
/// Density operators (Hermitian, unit trace, positive).
using DensityOperator = CMatrix;
/// Operators on column-vectorized density matrices (n^2 x n^2).
using Superoperator = CMatrix;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Matrix exponential (scaling and squaring with Pade approximants).
inline CMatrix expm(const CMatrix& m) { return m.exp(); }

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_residual(const CMatrix& m) {
  return max_abs(m - m.adjoint());
}

inline bool is_hermitian(const CMatrix& m, double tol = 1e-12) {
  return m.rows() == m.cols() && hermiticity_residual(m) < tol;
}

inline bool is_unitary(const CMatrix& m, double tol = 1e-9) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m.adjoint() * m - CMatrix::Identity(m.rows(), m.cols())) < tol;
}

inline double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

/// Column-major vectorization vec(X), matching (B^T (x) A) vec X = vec(AXB).
inline CVector vectorize(const CMatrix& m) {
  return Eigen::Map<const CVector>(m.data(), m.size());
}

inline CMatrix unvectorize(const CVector& v, Eigen::Index n) {
  if (v.size() != n * n) throw DimensionMismatch("vector length is not n^2");
  return Eigen::Map<const CMatrix>(v.data(), n, n);
}

/// Kronecker product of dense complex matrices.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Trace norm of a Hermitian matrix, halved: the trace distance of
/// two density operators when passed their difference.
inline double trace_distance(const CMatrix& a, const CMatrix& b) {
  CMatrix diff = a - b;
  diff = 0.5 * (diff + diff.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(diff, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// Square band matrix holding diagonals with offsets lo..hi, where
/// offset o stores entries M(r, r + o).
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(Eigen::Index n, int lo, int hi) : n_(n), lo_(lo), hi_(hi) {
    diags_.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (int o = lo; o <= hi; ++o) {
      diags_.push_back(CVector::Zero(std::max<Eigen::Index>(0, n - std::abs(o))));
    }
  }

  static BandMatrix identity(Eigen::Index n) {
    BandMatrix b(n, 0, 0);
    b.diag(0).setOnes();
    return b;
  }

  Eigen::Index size() const { return n_; }
  int lo() const { return lo_; }
  int hi() const { return hi_; }

  CVector& diag(int offset) { return diags_[static_cast<std::size_t>(offset - lo_)]; }
  const CVector& diag(int offset) const {
    return diags_[static_cast<std::size_t>(offset - lo_)];
  }

  /// First row index carrying an entry on the given diagonal.
  static Eigen::Index row0(int offset) { return offset < 0 ? -offset : 0; }

  cplx operator()(Eigen::Index r, Eigen::Index c) const {
    const auto o = static_cast<int>(c - r);
    if (o < lo_ || o > hi_) return {0.0, 0.0};
    return diag(o)(r - row0(o));
  }

  CMatrix dense() const {
    CMatrix m = CMatrix::Zero(n_, n_);
    for (int o = lo_; o <= hi_; ++o) {
      const auto& dv = diag(o);
      const Eigen::Index r0 = row0(o);
      for (Eigen::Index k = 0; k < dv.size(); ++k) m(r0 + k, r0 + k + o) = dv(k);
    }
    return m;
  }

  BandMatrix adjoint() const {
    BandMatrix out(n_, -hi_, -lo_);
    for (int o = lo_; o <= hi_; ++o) out.diag(-o) = diag(o).conjugate();
    return out;
  }

  /// out += this * x
  void apply_left_add(const CMatrix& x, CMatrix& out, cplx scale = 1.0) const {
    for (int o = lo_; o <= hi_; ++o) {
      const auto& dv = diag(o);
      const Eigen::Index len = dv.size();
      if (len == 0) continue;
      const Eigen::Index r0 = row0(o);
      out.middleRows(r0, len).noalias() +=
          (scale * dv).asDiagonal() * x.middleRows(r0 + o, len);
    }
  }

  /// out += x * this
  void apply_right_add(const CMatrix& x, CMatrix& out, cplx scale = 1.0) const {
    for (int o = lo_; o <= hi_; ++o) {
      const auto& dv = diag(o);
      const Eigen::Index len = dv.size();
      if (len == 0) continue;
      const Eigen::Index r0 = row0(o);
      out.middleCols(r0 + o, len).noalias() +=
          x.middleCols(r0, len) * (scale * dv).asDiagonal();
    }
  }

  /// Product of two band matrices; the result's bandwidth is the sum.
  friend BandMatrix operator*(const BandMatrix& a, const BandMatrix& b) {
    if (a.n_ != b.n_) throw DimensionMismatch("band matrix sizes differ");
    const Eigen::Index n = a.n_;
    BandMatrix out(n, a.lo_ + b.lo_, a.hi_ + b.hi_);
    for (int oa = a.lo_; oa <= a.hi_; ++oa) {
      const auto& da = a.diag(oa);
      const Eigen::Index ra = row0(oa);
      for (int ob = b.lo_; ob <= b.hi_; ++ob) {
        const auto& db = b.diag(ob);
        const Eigen::Index rb = row0(ob);
        auto& dc = out.diag(oa + ob);
        const Eigen::Index rc = row0(oa + ob);
        // a(r, r+oa) * b(r+oa, r+oa+ob) contributes to c(r, r+oa+ob).
        for (Eigen::Index k = 0; k < da.size(); ++k) {
          const Eigen::Index r = ra + k;
          const Eigen::Index m = r + oa;
          const Eigen::Index kb = m - rb;
          if (kb < 0 || kb >= db.size()) continue;
          dc(r - rc) += da(k) * db(kb);
        }
      }
    }
    return out;
  }

 private:
  Eigen::Index n_ = 0;
  int lo_ = 0;
  int hi_ = 0;
  std::vector<CVector> diags_;
};

}  // namespace holocat
