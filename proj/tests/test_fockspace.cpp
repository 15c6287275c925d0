#include <gtest/gtest.h>

#include <sstream>

#include "holocat/fockspace.hpp"

using namespace holocat;

TEST(Fockspace, LadderCommutatorIsIdentityAwayFromEdge) {
  const SpaceConfig cfg(12);
  const auto ops = ladder_operators(cfg);
  const CMatrix c = ops.a * ops.a_dagger - ops.a_dagger * ops.a;
  for (int k = 0; k < 11; ++k) EXPECT_NEAR(std::abs(c(k, k) - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(max_abs(ops.n - ops.a_dagger * ops.a), 0.0, 1e-14);
}

TEST(Fockspace, AdequacyRule) {
  EXPECT_EQ(adequate_truncation(2.0), 19);
  EXPECT_EQ(adequate_truncation(3.0), 29);
  EXPECT_EQ(adequate_truncation(0.0), 5);
  EXPECT_THROW(coherent_state({2.0, 0.0}, SpaceConfig(18)), TruncationError);
  EXPECT_NO_THROW(coherent_state({2.0, 0.0}, SpaceConfig(19)));
}

TEST(Fockspace, CoherentStateNormAndTail) {
  for (double r : {0.5, 1.0, 2.0, 3.0}) {
    const SpaceConfig cfg(adequate_truncation(r));
    const StateVector c = coherent_state(std::polar(r, 0.7), cfg);
    EXPECT_NEAR(c.norm(), 1.0, 1e-12);
    EXPECT_LT(tail_weight(c, cfg), cfg.tail_tol);
  }
}

TEST(Fockspace, CoherentEigenvalueResidualAtLargeTruncation) {
  const SpaceConfig cfg(60);
  const cplx alpha{2.0, 0.0};
  const auto a = annihilation(60);
  const StateVector c = coherent_state(alpha, cfg);
  EXPECT_LT((a * c - alpha * c).norm(), 1e-6);
}

TEST(Fockspace, CoherentAmplitudesMatchFactorialForm) {
  const cplx alpha{1.3, -0.4};
  const StateVector c = coherent_amplitudes(alpha, 15);
  for (int k = 0; k < 15; ++k) {
    const cplx ref = std::exp(-0.5 * std::norm(alpha)) * std::pow(alpha, k) /
                     std::sqrt(std::tgamma(k + 1.0));
    EXPECT_NEAR(std::abs(c(k) - ref), 0.0, 1e-13);
  }
}

TEST(Fockspace, DisplacementOfVacuumIsCoherent) {
  const SpaceConfig cfg(30);
  const cplx g{1.2, 0.9};
  const Operator D = displacement(g, cfg);
  EXPECT_LT((D.col(0) - coherent_state(g, cfg)).norm(), 1e-8);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(D.col(k).norm(), 1.0, 1e-8);
}

TEST(Fockspace, LaguerreElementsMatchMatrixExponential) {
  // Oracle: D built by expm in a padded space.
  const SpaceConfig cfg(25);
  const cplx g{0.8, -0.6};
  const Operator D = displacement(g, cfg);
  double worst = 0.0;
  for (int m = 0; m < 12; ++m)
    for (int k = 0; k < 12; ++k) worst = std::max(worst, std::abs(D(m, k) - displacement_element(m, k, g)));
  EXPECT_LT(worst, 1e-10);
}

TEST(Fockspace, DisplacementBeyondAdequacyThrows) {
  EXPECT_THROW(displacement({4.0, 0.0}, SpaceConfig(20)), TruncationError);
}

TEST(Fockspace, RotationActsOnCoherentStates) {
  const SpaceConfig cfg(30);
  const cplx alpha{2.0, 0.0};
  const double phi = 0.9;
  const StateVector rotated = rotation(phi, cfg) * coherent_state(alpha, cfg);
  EXPECT_LT((rotated - coherent_state(alpha * std::polar(1.0, phi), cfg)).norm(), 1e-12);
}

TEST(Fockspace, VacuumWignerIsGaussian) {
  const SpaceConfig cfg(20);
  const StateVector v = fock_state(0, cfg);
  const DensityOperator rho = v * v.adjoint();
  PhaseSpaceGrid grid{-1.5, 1.5, -1.5, 1.5, 13, 13};
  const WignerGrid w = wigner(rho, grid);
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.np; ++j) {
      const double b2 = grid.x(i) * grid.x(i) + grid.p(j) * grid.p(j);
      EXPECT_NEAR(w.values(i, j), 2.0 / kPi * std::exp(-2.0 * b2), 1e-10);
    }
  EXPECT_LT(w.max_imag_residue, 1e-12);
}

TEST(Fockspace, WignerOfFockOneIsNegativeAtOrigin) {
  const SpaceConfig cfg(20);
  const StateVector v = fock_state(1, cfg);
  PhaseSpaceGrid grid{0.0, 0.0, 0.0, 0.0, 1, 1};
  EXPECT_NEAR(wigner(v * v.adjoint(), grid).values(0, 0), -2.0 / kPi, 1e-12);
}

TEST(Fockspace, WignerIntegratesToOne) {
  const SpaceConfig cfg(60);
  const StateVector c = coherent_state({0.5, 0.25}, cfg);
  PhaseSpaceGrid grid{-2.7, 2.7, -2.7, 2.7, 55, 55};
  EXPECT_NEAR(wigner_integral(wigner(c * c.adjoint(), grid)), 1.0, 1e-4);
}

TEST(Fockspace, WignerRejectsLargeWindowAndBadTrace) {
  const SpaceConfig cfg(16);
  const StateVector v = fock_state(0, cfg);
  EXPECT_THROW(wigner(v * v.adjoint(), PhaseSpaceGrid{-3, 3, -3, 3, 5, 5}), TruncationError);
  EXPECT_THROW(wigner(2.0 * v * v.adjoint(), PhaseSpaceGrid{-1, 1, -1, 1, 5, 5}), InvalidSpec);
}

TEST(Fockspace, ExportFormats) {
  const SpaceConfig cfg(10);
  const StateVector v = fock_state(0, cfg);
  const WignerGrid w = wigner(v * v.adjoint(), PhaseSpaceGrid{-1, 1, -1, 1, 3, 2});
  std::ostringstream csv;
  write_wigner_csv(w, csv);
  EXPECT_EQ(csv.str().substr(0, 6), "x,p,w\n");
  std::ostringstream pgm;
  write_wigner_pgm(w, pgm);
  const std::string s = pgm.str();
  EXPECT_EQ(s.substr(0, 3), "P5\n");
  EXPECT_NE(s.find("# wigner min="), std::string::npos);
  EXPECT_NE(s.find("\n3 2\n255\n"), std::string::npos);
  std::ostringstream amp;
  write_amplitudes_csv(v, amp);
  EXPECT_EQ(amp.str().substr(0, 13), "n,re,im\n0,1,0");
}

TEST(BandMatrix, ProductsMatchDense) {
  BandMatrix a(7, 0, 2), b(7, -1, 1);
  for (int o = 0; o <= 2; ++o) a.diag(o).setRandom();
  for (int o = -1; o <= 1; ++o) b.diag(o).setRandom();
  EXPECT_LT(max_abs((a * b).dense() - a.dense() * b.dense()), 1e-13);
  const CMatrix x = CMatrix::Random(7, 7);
  CMatrix l = CMatrix::Zero(7, 7), r = CMatrix::Zero(7, 7);
  a.apply_left_add(x, l);
  a.apply_right_add(x, r);
  EXPECT_LT(max_abs(l - a.dense() * x), 1e-13);
  EXPECT_LT(max_abs(r - x * a.dense()), 1e-13);
  EXPECT_LT(max_abs(a.adjoint().dense() - a.dense().adjoint()), 1e-15);
}
