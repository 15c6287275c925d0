#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "holocat/harness.hpp"

using namespace holocat;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() /
                     ("holocat_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                      "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p.string();
}

template <typename F>
std::string error_text(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Phase, WrapAndExtract) {
  EXPECT_NEAR(wrap_phase(3.0 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_phase(-kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_phase(0.3 - 4.0 * kPi), 0.3, 1e-12);

  CVector c = CVector::Constant(2, 1.0 / std::sqrt(2.0));
  const CMatrix in = c * c.adjoint();
  CMatrix u = CMatrix::Identity(2, 2);
  u(1, 1) = std::polar(1.0, -1.2);
  const CVector t = u * c;
  EXPECT_NEAR(extract_relative_phase(t * t.adjoint(), in, 0, 1), -1.2, 1e-12);
  EXPECT_THROW(extract_relative_phase(CMatrix::Identity(2, 2) / 2.0, in, 0, 1), CoherenceLost);
  EXPECT_THROW(extract_relative_phase(in, CMatrix::Identity(2, 2) / 2.0, 0, 1), DegenerateInput);
}

TEST(Fits, LinearAndLogLog) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 - 0.5 * v);
  const FitResult f = linear_fit(x, y);
  EXPECT_NEAR(f.slope, -0.5, 1e-14);
  EXPECT_NEAR(f.intercept, 2.0, 1e-14);
  EXPECT_NEAR(f.r2, 1.0, 1e-14);
  EXPECT_NEAR(f.slope_stderr, 0.0, 1e-12);
  EXPECT_TRUE(f.confident);

  std::vector<double> yp;
  for (double v : x) yp.push_back(3.0 * std::pow(v, -1.7));
  const FitResult g = loglog_fit(x, yp);
  EXPECT_NEAR(g.slope, -1.7, 1e-12);
  EXPECT_NEAR(g.x_min, 1.0, 0.0);
  EXPECT_NEAR(g.x_max, 5.0, 0.0);

  // Noisy data: the stderr covers the true slope.
  std::mt19937 rng(7);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> xn, yn;
  for (int k = 0; k < 40; ++k) {
    xn.push_back(k * 0.1);
    yn.push_back(1.0 + 0.8 * k * 0.1 + noise(rng));
  }
  const FitResult h = linear_fit(xn, yn);
  EXPECT_LT(std::abs(h.slope - 0.8), 4.0 * h.slope_stderr);

  EXPECT_THROW(loglog_fit({1.0, -1.0}, {1.0, 1.0}), InvalidSpec);
  EXPECT_THROW(linear_fit({1.0}, {1.0, 2.0}), DimensionMismatch);
  EXPECT_FALSE(linear_fit({1.0, 2.0}, {1.0, 2.0}).confident);
}

TEST(Config, RoundTripThroughIni) {
  const fs::path dir = scratch_dir();
  GateConfig c;
  c.kind = GateKind::Collision;
  c.phi = 1.25;
  c.alpha_min = 0.3;
  c.d = 3;
  c.alpha = 2.5;
  c.T = 120.0;
  c.integrator = Integrator::Rk4;
  c.profile = RampProfile::Smoothstep;
  std::ofstream os(dir / "c.ini");
  write_tree_ini(gate_config_tree(c), os);
  os.close();
  const GateConfig r = load_gate_config((dir / "c.ini").string());
  EXPECT_EQ(r.kind, GateKind::Collision);
  EXPECT_DOUBLE_EQ(r.phi, 1.25);
  EXPECT_DOUBLE_EQ(r.alpha_min, 0.3);
  EXPECT_EQ(r.d, 3);
  EXPECT_DOUBLE_EQ(r.alpha, 2.5);
  EXPECT_DOUBLE_EQ(r.T, 120.0);
  EXPECT_EQ(r.integrator, Integrator::Rk4);
  EXPECT_EQ(r.profile, RampProfile::Smoothstep);
}

TEST(Config, ErrorsNameTheFieldOrLine) {
  const fs::path dir = scratch_dir();
  const std::string bad_value =
      write_file(dir / "v.ini", "[meta]\nschema = holocat-gate/1\n[jump]\nalpha = two\n");
  const std::string msg = error_text([&] { load_gate_config(bad_value); });
  EXPECT_NE(msg.find("jump.alpha"), std::string::npos) << msg;

  const std::string unknown = write_file(dir / "u.ini", "[jump]\nalpah = 2\n");
  EXPECT_NE(error_text([&] { load_gate_config(unknown); }).find("jump.alpah"), std::string::npos);

  const std::string syntax = write_file(dir / "s.ini", "[gate]\nkind = loop\nthis line is broken\n");
  EXPECT_NE(error_text([&] { load_gate_config(syntax); }).find(":3"), std::string::npos);

  const std::string schema = write_file(dir / "m.ini", "[meta]\nschema = other/9\n");
  EXPECT_NE(error_text([&] { load_gate_config(schema); }).find("schema"), std::string::npos);

  const std::string orphan = write_file(dir / "o.ini", "alpha = 2\n[jump]\nd = 2\n");
  EXPECT_NE(error_text([&] { load_gate_config(orphan); }).find("outside any section"), std::string::npos);

  const std::string kind = write_file(dir / "k.ini", "[gate]\nkind = spiral\n");
  EXPECT_NE(error_text([&] { load_gate_config(kind); }).find("gate.kind"), std::string::npos);

  EXPECT_NE(error_text([&] { load_gate_config((dir / "missing.ini").string()); }).find("not found"),
            std::string::npos);
  EXPECT_EQ(ConfigError("x").kind(), ErrorKind::Validation);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"loop_d2.ini", "collision_d2.ini", "collision_d3.ini", "sweep_loop_d2.ini"}) {
    const fs::path p = fs::path(HOLOCAT_SOURCE_DIR) / "configs" / name;
    EXPECT_NO_THROW(build_gate(load_gate_config(p.string()))) << name;
  }
}

TEST(Setup, LoopAndCollisionGeometry) {
  GateConfig c;
  c.area = kPi / 4.0;
  const GateSetup s = build_gate(c);
  ASSERT_TRUE(s.loop.has_value());
  EXPECT_NEAR(s.loop->radius, 0.5, 1e-14);
  EXPECT_NEAR(s.expected_phase, kPi / 2.0, 1e-10);
  EXPECT_EQ(s.phase_pair.second, 1);
  EXPECT_EQ(s.phase_basis, BasisTag::Coherent);
  EXPECT_EQ(s.space.n_trunc, adequate_truncation(s.path.max_modulus()) + c.n_margin);
  // Uniform superposition of the coherent states.
  EXPECT_LT(max_abs(cat_to_coherent(s.c_in * s.c_in.adjoint()) - CMatrix::Constant(2, 2, 0.5)), 1e-14);

  GateConfig k;
  k.kind = GateKind::Collision;
  k.phi = 2.0 * kPi / 3.0;
  k.d = 3;
  const GateSetup t = build_gate(k);
  EXPECT_NEAR(t.expected_phase, -2.0 * kPi / 3.0, 1e-14);
  EXPECT_EQ(t.phase_basis, BasisTag::Cat);
  EXPECT_FALSE(t.warnings.empty());  // metric 2*2*sin(pi/3) < 6

  GateConfig bad;
  bad.alpha = 1.5;
  EXPECT_THROW(build_gate(bad), SeparationViolation);
  bad.alpha = -1.0;
  EXPECT_THROW(build_gate(bad), InvalidSpec);
}

TEST(Sweep, CsvRowRoundTrip) {
  SweepRecord r;
  r.kind = GateKind::Collision;
  r.d = 3;
  r.alpha = 2.5;
  r.kappa_T = 40;
  r.epsilon = 1.5e-3;
  r.steps = 1234;
  r.status = "failed, badly";
  const auto p = parse_csv_row(to_csv_row(r));
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(p->key(), r.key());
  EXPECT_DOUBLE_EQ(p->epsilon, 1.5e-3);
  EXPECT_EQ(p->steps, 1234);
  EXPECT_EQ(p->status, "failed; badly");
  EXPECT_TRUE(std::isnan(p->gap_over_kappa));
  EXPECT_FALSE(parse_csv_row(kSweepHeader).has_value());
}

TEST(Sweep, FitsRecoverPowerLaws) {
  std::vector<SweepRecord> rs;
  for (double a : {1.5, 2.0, 2.5, 3.0})
    for (double T : {50.0, 100.0, 200.0}) {
      SweepRecord r;
      r.alpha = a;
      r.kappa_T = T;
      r.epsilon = 0.7 / (T * a * a);
      rs.push_back(r);
    }
  const SweepFits f = fit_sweep(rs);
  EXPECT_NEAR(f.vs_T.slope, -1.0, 1e-12);
  EXPECT_NEAR(f.p, 2.0, 1e-12);
  EXPECT_EQ(f.vs_alpha.samples, 4);
}

TEST(Sweep, ResumeReusesRowsAndKeepsForeignOnes) {
  const fs::path dir = scratch_dir();
  GateConfig base;
  base.kind = GateKind::Collision;
  base.phi = kPi / 2.0;
  base.alpha = 2.0;
  SweepGrid grid{base, {20.0, 30.0}, {2.0}, {}};
  SweepOptions opt;
  opt.output = (dir / "sweep.csv").string();
  opt.threads = 2;
  const SweepResult first = scaling_sweep(grid, opt);
  ASSERT_EQ(first.records.size(), 2u);
  EXPECT_EQ(first.reused, 0);
  for (const auto& r : first.records) EXPECT_TRUE(r.ok()) << r.status;

  const SweepResult again = scaling_sweep(grid, opt);
  EXPECT_EQ(again.reused, 2);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(to_csv_row(again.records[k]), to_csv_row(first.records[k]));

  // A fresh run without resume reproduces the numbers exactly.
  SweepOptions fresh;
  const SweepResult rerun = scaling_sweep(grid, fresh);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(rerun.records[k].epsilon, first.records[k].epsilon);

  // A different grid sharing the file keeps the earlier rows.
  SweepGrid other{base, {}, {}, {{25.0, 2.0}}};
  const SweepResult extra = scaling_sweep(other, opt);
  EXPECT_EQ(extra.reused, 0);
  EXPECT_EQ(read_sweep_csv(opt.output).size(), 3u);
  EXPECT_FALSE(fs::exists(opt.output + ".tmp"));
}

TEST(Sweep, FailedPointsAreRecordedNotThrown) {
  GateConfig base;
  base.alpha = 2.0;
  SweepGrid grid{base, {}, {}, {{10.0, 1.0}}};  // loop at alpha = 1 violates the separation limit
  const SweepResult r = scaling_sweep(grid, SweepOptions{});
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_FALSE(r.records[0].ok());
  EXPECT_NE(r.records[0].status.find("SeparationViolation"), std::string::npos);
}

TEST(Gap, TwoPhotonOriginAndGrowth) {
  const GapSweepResult g = gap_sweep({0.0, 2.0, -1.0});
  ASSERT_EQ(g.points.size(), 3u);
  EXPECT_NEAR(g.points[0].gap_over_kappa, 1.0, 1e-8);
  EXPECT_TRUE(std::isnan(g.points[0].ratio));
  EXPECT_EQ(g.points[1].status, "ok");
  EXPECT_GT(g.points[1].gap_over_kappa, 1.0);
  EXPECT_NE(g.points[2].status, "ok");
  EXPECT_NEAR(g.proportionality, g.points[1].gap_over_kappa / 4.0, 1e-12);
}
