#include <gtest/gtest.h>

#include <sstream>

#include "holocat/catcode.hpp"
#include "holocat/liouvillian.hpp"

using namespace holocat;

namespace {

std::vector<cplx> symmetric_roots(double alpha, int d) {
  std::vector<cplx> r;
  for (int nu = 0; nu < d; ++nu) r.push_back(alpha * root_of_unity(nu, d));
  return r;
}

DensityOperator projector(const StateVector& v) { return v * v.adjoint(); }

}  // namespace

TEST(Jump, SingleRootAtOriginIsScaledAnnihilator) {
  const SpaceConfig cfg(10);
  const Operator F = build_jump(JumpSpec{2.0, {0.0}}, cfg);
  EXPECT_LT(max_abs(F - std::sqrt(2.0) * annihilation(10)), 1e-14);
}

TEST(Jump, TwoPhotonForm) {
  const SpaceConfig cfg(20);
  const cplx a{1.7, 0.3};
  const Operator F = build_jump(JumpSpec{1.5, {a, -a}}, cfg);
  const Operator an = annihilation(20);
  const Operator ref = std::sqrt(1.5) * (an * an - a * a * Operator::Identity(20, 20));
  EXPECT_LT(max_abs(F - ref), 1e-12);
}

TEST(Jump, AnnihilatesCoherentStatesAtRoots) {
  const SpaceConfig cfg(40);
  const auto roots = symmetric_roots(2.0, 2);
  const Operator F = build_jump(JumpSpec{1.0, roots}, cfg);
  for (auto r : roots) EXPECT_LT((F * coherent_state(r, cfg)).norm(), 1e-5);
}

TEST(Jump, InadequateTruncationThrows) {
  EXPECT_THROW(build_jump(JumpSpec{1.0, {3.0, -3.0}}, SpaceConfig(20)), TruncationError);
  EXPECT_THROW(build_jump(JumpSpec{0.0, {1.0}}, SpaceConfig(20)), InvalidSpec);
  EXPECT_THROW(build_jump(JumpSpec{1.0, {}}, SpaceConfig(20)), InvalidSpec);
}

TEST(Superoperator, MatchesDirectEvaluation) {
  const SpaceConfig cfg(8);
  const Operator F = build_jump(JumpSpec{1.0, {cplx{0.4, 0.2}, cplx{-0.3, 0.1}}}, cfg);
  const Superoperator L = liouvillian_matrix(F);
  CMatrix rho = CMatrix::Random(8, 8);
  rho = (rho * rho.adjoint()).eval();
  rho /= rho.trace();
  const CMatrix direct = lindblad_rhs(F, rho);
  EXPECT_LT(max_abs(unvectorize(L * vectorize(rho), 8) - direct), 1e-12);
  // Trace preservation: vec(I) is a left null vector.
  const CVector id = vectorize(CMatrix::Identity(8, 8));
  EXPECT_LT((id.adjoint() * L).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Superoperator, BandedApplyMatchesDense) {
  const int n = 14;
  const std::vector<cplx> roots{cplx{1.0, 0.5}, cplx{-0.7, 0.2}, cplx{0.1, -0.9}};
  const BandedGenerator g(roots, 1.3, n);
  const Operator F = jump_band(roots, 1.3, n).dense();
  const CMatrix rho = CMatrix::Random(n, n);
  CMatrix out, scratch;
  g.apply(rho, out, scratch);
  EXPECT_LT(max_abs(out - lindblad_rhs(F, rho)), 1e-10);
}

TEST(Superoperator, SteadyCoherentStateIsAnnihilated) {
  const SpaceConfig cfg(30);
  const cplx a{1.5, 0.0};
  const Superoperator L = liouvillian_matrix(build_jump(JumpSpec{1.0, {a}}, cfg));
  const CVector v = vectorize(projector(coherent_state(a, cfg)));
  EXPECT_LT((L * v).norm(), 1e-6);
}

TEST(Superoperator, TwoPhotonLossKeepsLowestFockBlock) {
  const SpaceConfig cfg(10);
  const Superoperator L = liouvillian_matrix(build_jump(JumpSpec{1.0, {0.0, 0.0}}, cfg));
  for (int m = 0; m < 2; ++m)
    for (int k = 0; k < 2; ++k) {
      const CMatrix x = fock_state(m, cfg) * fock_state(k, cfg).adjoint();
      EXPECT_LT((L * vectorize(x)).norm(), 1e-14);
    }
}

TEST(Superoperator, HermitianRepresentationRoundTrip) {
  const SpaceConfig cfg(8);
  const Operator F = build_jump(JumpSpec{1.0, {cplx{0.5, 0.1}}}, cfg);
  const RMatrix R1 = hermitian_representation(liouvillian_matrix(F));
  const RMatrix R2 = hermitian_representation_from_jump(F);
  EXPECT_LT((R1 - R2).cwiseAbs().maxCoeff(), 1e-12);
  const HermitianBasis hb(8);
  CMatrix x = CMatrix::Random(8, 8);
  EXPECT_LT(max_abs(hb.matrix(hb.coords(x)) - x), 1e-13);
}

TEST(Evolve, SteadyStateStaysPut) {
  const SpaceConfig cfg(30);
  const cplx a{1.5, 0.0};
  const DensityOperator rho0 = projector(coherent_state(a, cfg));
  Schedule s;
  s.T = 5.0;
  s.samples = 5;
  const Trajectory tr = evolve(rho0, JumpSpec{1.0, {a}}, cfg, s);
  EXPECT_LT(trace_distance(tr.final_state, rho0), 1e-8);
  ASSERT_EQ(tr.samples.size(), 6u);
  for (const auto& smp : tr.samples) EXPECT_NEAR(smp.purity, 1.0, 1e-8);
}

TEST(Evolve, AgreesWithDenseExponentialPropagation) {
  // Oracle: exp(L T) applied to vec(rho0) at a small truncation.
  const SpaceConfig cfg(12, 1e-3);
  const JumpSpec spec{1.0, {cplx{0.6, 0.2}, cplx{-0.6, -0.2}}};
  const Operator F = build_jump(spec, cfg);
  const DensityOperator rho0 = projector(fock_state(3, cfg));
  const double T = 2.0;
  const CVector ref = expm(liouvillian_matrix(F) * T) * vectorize(rho0);
  for (Integrator in : {Integrator::EtdRk4, Integrator::Rk4}) {
    Schedule s;
    s.T = T;
    s.integrator = in;
    s.steps = 4000;
    const Trajectory tr = evolve(rho0, spec, cfg, s);
    EXPECT_LT(trace_distance(tr.final_state, unvectorize(ref, 12)), 1e-7) << to_string(in);
    EXPECT_LT(tr.log.max_trace_drift, 1e-6);
    EXPECT_LT(tr.log.max_hermiticity_residual, 1e-8);
  }
}

TEST(Evolve, VacuumRelaxesToCoherentState) {
  const SpaceConfig cfg(20);
  const cplx a{1.0, 0.0};
  Schedule s;
  s.T = 20.0;
  const Trajectory tr = evolve(projector(fock_state(0, cfg)), JumpSpec{1.0, {a}}, cfg, s);
  EXPECT_LT(trace_distance(tr.final_state, projector(coherent_state(a, cfg))), 1e-4);
  // Cross-check against the static propagator.
  const CVector ref = expm(liouvillian_matrix(build_jump(JumpSpec{1.0, {a}}, cfg)) * 20.0) *
                      vectorize(projector(fock_state(0, cfg)));
  EXPECT_LT(trace_distance(tr.final_state, unvectorize(ref, 20)), 1e-6);
}

TEST(Evolve, OversizedStepIsRejected) {
  const SpaceConfig cfg(25);
  const JumpSpec spec{1.0, symmetric_roots(2.0, 2)};
  Schedule s;
  s.T = 10.0;
  s.steps = 100;  // h = 0.1, far beyond the stability limit
  s.integrator = Integrator::Rk4;
  EXPECT_THROW(evolve(projector(fock_state(0, cfg)), spec, cfg, s), StepUnstable);
}

TEST(Evolve, TailGrowthIsReported) {
  // The steady coherent state at |alpha| = 3 puts ~1e-7 on the top levels.
  const SpaceConfig cfg(29, 1e-12);
  ParameterPath p;
  p.d = 1;
  p.total_T = 6.0;
  p.roots.push_back(RootTrack{{Segment::line(0.0, 3.0, 1.0 / 6.0), Segment::hold(3.0, 5.0 / 6.0)}});
  Schedule s;
  s.T = 6.0;
  EXPECT_THROW(evolve(projector(fock_state(0, cfg)), p, 1.0, cfg, s), TruncationError);
}

TEST(Evolve, RejectsInvalidInitialState) {
  const SpaceConfig cfg(10);
  Schedule s;
  s.T = 1.0;
  EXPECT_THROW(evolve(2.0 * projector(fock_state(0, cfg)), JumpSpec{1.0, {0.5}}, cfg, s), InvalidSpec);
  EXPECT_THROW(evolve(projector(fock_state(0, SpaceConfig(8))), JumpSpec{1.0, {0.5}}, cfg, s),
               DimensionMismatch);
}

TEST(Spectrum, SingleRootSteadySpaceAndGap) {
  const SpaceConfig cfg(30);
  const cplx a{1.5, 0.0};
  const Superoperator L = liouvillian_matrix(build_jump(JumpSpec{1.0, {a}}, cfg));
  const SteadySpace ss = steady_space(L, 1.0);
  EXPECT_EQ(ss.dimension, 1);
  DensityOperator b = ss.basis.front();
  b /= b.trace();
  EXPECT_LT(trace_distance(b, projector(coherent_state(a, cfg))), 1e-6);
  // Shifted damped oscillator: spectrum -kappa (m + k)/2 +- ..., slowest kappa/2.
  EXPECT_NEAR(dissipation_gap(ss.spectrum, 1.0), 0.5, 1e-8);
}

TEST(Spectrum, TwoPhotonLossAtOriginHasUnitGap) {
  const SpaceConfig cfg(16);
  const RMatrix R = hermitian_representation_from_jump(build_jump(JumpSpec{1.0, {0.0, 0.0}}, cfg));
  const auto ev = liouvillian_spectrum(R);
  const double g = dissipation_gap(ev, 1.0);
  EXPECT_NEAR(g, 1.0, 1e-8);
  EXPECT_EQ(null_cluster(ev, 1.0, 1e-7).dimension, 4);
}

TEST(Spectrum, TwoComponentSteadySpaceMatchesDenseOracle) {
  const double alpha = 1.5;
  const SpaceConfig cfg(spectral_truncation(alpha));
  const Operator F = build_jump(JumpSpec{1.0, symmetric_roots(alpha, 2)}, cfg);
  const SteadySpace ss = steady_space(liouvillian_matrix(F), 1.0);
  EXPECT_EQ(ss.dimension, 4);
  // Oracle: complex eigendecomposition of the full superoperator.
  Eigen::ComplexEigenSolver<CMatrix> es(liouvillian_matrix(F), false);
  int zeros = 0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    if (std::abs(es.eigenvalues()(k)) < 1e-7) ++zeros;
  EXPECT_EQ(zeros, 4);
  for (const auto& b : ss.basis) EXPECT_LT((lindblad_rhs(F, b)).norm(), 1e-7);
}

TEST(Spectrum, UnseparatedClusterIsIllConditioned) {
  const std::vector<cplx> spec{0.0, cplx{-3e-7, 0.0}, cplx{-1.0, 0.0}};
  EXPECT_EQ(null_cluster(spec, 1.0, 1e-7).dimension, 1);
  EXPECT_THROW(dissipation_gap(spec, 1.0, 1e-7), IllConditioned);
  EXPECT_NEAR(dissipation_gap(spec, 1.0, 1e-6), 1.0, 1e-12);
}

TEST(Conserved, SingleRootGivesIdentity) {
  const SpaceConfig cfg(25);
  const cplx a{1.0, 0.0};
  const Operator F = build_jump(JumpSpec{1.0, {a}}, cfg);
  const std::vector<StateVector> dfs{coherent_state(a, cfg)};
  const auto J = conserved_quantities(F, 1.0, dfs);
  ASSERT_EQ(J.size(), 1u);
  EXPECT_LT(max_abs(J[0].matrix - CMatrix::Identity(25, 25)), 1e-6);
}

TEST(Conserved, DualPairingAndNoCrosstalk) {
  const double alpha = 2.0;
  const SpaceConfig cfg(spectral_truncation(alpha));
  const CatBasis b = cat_basis(alpha, 2, cfg);
  const Operator F = build_jump(JumpSpec{1.0, b.roots}, cfg);
  const auto J = conserved_quantities(F, 1.0, b.states);
  ASSERT_EQ(J.size(), 4u);
  const Operator P = dfs_projector(b);
  const Operator Q = Operator::Identity(cfg.n_trunc, cfg.n_trunc) - P;
  for (const auto& q : J) {
    EXPECT_LT(q.adjoint_residual, 1e-8);
    EXPECT_LT((P * q.matrix * Q).norm(), 1e-5 * q.matrix.norm());
    for (int s = 0; s < 2; ++s)
      for (int sp = 0; sp < 2; ++sp) {
        const cplx pair = b.states[sp].dot(q.matrix.adjoint() * b.states[s]);
        const double want = (q.mu == s && q.mu_prime == sp) ? 1.0 : 0.0;
        EXPECT_NEAR(std::abs(pair - want), 0.0, 1e-8);
      }
  }
}

TEST(Conserved, ConstantAlongTrajectory) {
  const double alpha = 2.0;
  const SpaceConfig cfg(spectral_truncation(alpha));
  const CatBasis b = cat_basis(alpha, 2, cfg);
  const Operator F = build_jump(JumpSpec{1.0, b.roots}, cfg);
  const auto J = conserved_quantities(F, 1.0, b.states);
  const CMatrix J01 = J[1].matrix;
  ASSERT_EQ(J[1].mu, 0);
  ASSERT_EQ(J[1].mu_prime, 1);
  // Start outside the steady space so the flow is nontrivial.
  const StateVector psi = (coherent_state({1.0, 0.5}, cfg) + fock_state(3, cfg)).normalized();
  Schedule s;
  s.T = 3.0;
  s.samples = 6;
  s.observables = {J01.adjoint()};
  const Trajectory tr = evolve(psi * psi.adjoint(), JumpSpec{1.0, b.roots}, cfg, s);
  const cplx first = tr.samples.front().expectations[0];
  for (const auto& smp : tr.samples) EXPECT_LT(std::abs(smp.expectations[0] - first), 1e-5);
}

TEST(Export, TrajectoryAndSpectrumCsv) {
  const SpaceConfig cfg(8);
  Schedule s;
  s.T = 0.5;
  s.samples = 2;
  s.observables = {annihilation(8)};
  const Trajectory tr = evolve(projector(fock_state(1, cfg)), JumpSpec{1.0, {0.3}}, cfg, s);
  std::ostringstream os;
  write_trajectory_csv(tr, os, {"a"});
  EXPECT_EQ(os.str().substr(0, 36), "t,trace,purity,tail_weight,a_re,a_im");
  std::ostringstream sp;
  write_spectrum_csv({cplx{-1.0, 0.5}}, sp);
  EXPECT_EQ(sp.str(), "re,im\n-1,0.5\n");
}
