#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace spikechain;

namespace {

struct Pipeline {
  ContinuumSolution sol;
  SpikeConfiguration initial, solved;
};

Pipeline run(const CurvatureModel& m, double eps, SolveOptions opt = {}) {
  Pipeline p;
  p.sol = shoot(m, fixtures::kernel(), eps);
  p.initial = initial_configuration(p.sol, fixtures::kernel(), m);
  error_terms(p.initial, fixtures::kernel(), m);
  p.solved = solve_corrections(p.initial, fixtures::kernel(), m, opt);
  return p;
}

const Pipeline& base() {
  static const Pipeline p = run(fixtures::symmetric_model(), 0.01);
  return p;
}

}  // namespace

TEST(DiscreteSolver, InitialConfigurationSamplesTrajectoryAtMidpoints) {
  const auto& p = base();
  const auto& c = p.initial;
  ASSERT_EQ(c.k, 22);
  ASSERT_EQ(c.s0.size(), 22u);
  EXPECT_DOUBLE_EQ(c.t_bar[0], 0.5 * c.h);
  EXPECT_EQ(static_cast<double>(c.s0[0]), p.sol.x(0.5 * c.h));
  for (std::size_t i = 0; i + 1 < c.s0.size(); ++i) EXPECT_LT(c.s0[i], c.s0[i + 1]);
  EXPECT_EQ(c.residuals.back(), c.initial_r_k);
  EXPECT_EQ(c.E_k, c.residuals.back());
}

TEST(DiscreteSolver, ErrorTermsVanishOnExactRecursion) {
  // Build positions from the first k-1 balance equations taken exactly.
  const auto& k = fixtures::kernel();
  const auto m = fixtures::symmetric_model();
  SpikeConfiguration c = base().initial;
  const Real e = c.eps;
  Real sum = 0;
  for (std::size_t i = 0; i + 1 < c.s0.size(); ++i) {
    sum += m.Hp<Real>(c.s0[i]);
    c.s0[i + 1] = c.s0[i] + e * invert_psi1<Real>(k, -e * e * sum);
  }
  const auto E = error_terms(c, k, m);
  // zero up to the rounding of one long double position
  for (std::size_t i = 0; i + 1 < E.size(); ++i) EXPECT_LE(std::fabs(static_cast<double>(E[i])), 1e-18) << i;
  const auto r = residual(c.s0, c.eps, k, m);
  for (std::size_t i = 0; i + 1 < r.size(); ++i) EXPECT_LE(std::fabs(static_cast<double>(r[i])), 1e-17) << i;
  EXPECT_EQ(r.back(), E.back());
}

TEST(DiscreteSolver, MirrorSymmetricPositionsCloseExactly) {
  // For H symmetric about b/2 any mirror-symmetric configuration has r_k = 0.
  const auto m = fixtures::symmetric_model();
  std::vector<Real> s;
  for (int i = 0; i < 9; ++i) s.push_back(0.5L + 0.4L * std::sin(0.17L * (i - 4)));
  const auto r = residual(s, 0.01, fixtures::kernel(), m);
  EXPECT_LE(std::fabs(static_cast<double>(r.back())), 1e-18);
}

TEST(DiscreteSolver, SolvedConfigurationMeetsTolerance) {
  const auto& c = base().solved;
  const Real tol = Real(1e-12) * c.eps * c.eps;
  EXPECT_LE(c.max_residual, tol);
  EXPECT_EQ(c.path, SolvePath::Staged);
  for (std::size_t i = 0; i < c.s.size(); ++i) EXPECT_EQ(c.y[i], c.s[i] - c.s0[i]);
  for (std::size_t i = 0; i + 1 < c.s.size(); ++i) EXPECT_LT(c.s[i], c.s[i + 1]);
  EXPECT_GT(c.y_inf_norm, 0.0L);
  EXPECT_LT(c.contraction, 0.9);
  EXPECT_TRUE(c.lambda_y1_ok);
  EXPECT_GT(c.lambda_second_worst, 0.0L);
}

TEST(DiscreteSolver, SolvedConfigurationIsMirrorSymmetric) {
  const auto& c = base().solved;
  const std::size_t k = c.s.size();
  for (std::size_t i = 0; i < k; ++i) EXPECT_LE(std::fabs(static_cast<double>(c.s[i] + c.s[k - 1 - i] - 1.0L)), 1e-15);
}

TEST(DiscreteSolver, NewtonPathAgreesWithStagedPath) {
  SolveOptions opt;
  opt.allow_staged = false;
  const auto c = solve_corrections(base().initial, fixtures::kernel(), fixtures::symmetric_model(), opt);
  EXPECT_EQ(c.path, SolvePath::Newton);
  EXPECT_LE(c.max_residual, Real(1e-12) * c.eps * c.eps);
  for (std::size_t i = 0; i < c.s.size(); ++i) EXPECT_NEAR(static_cast<double>(c.s[i] - base().solved.s[i]), 0.0, 1e-14);
}

TEST(DiscreteSolver, AlreadySolvedInputNeedsNoIterations) {
  SpikeConfiguration c = base().solved;
  c.s0 = c.s;
  const auto again = solve_corrections(c, fixtures::kernel(), fixtures::symmetric_model());
  EXPECT_EQ(again.iterations, 0);
  EXPECT_EQ(again.y_inf_norm, 0.0L);
}

TEST(DiscreteSolver, MatchesPowellHybridOracle) {
  const auto m = fixtures::symmetric_model();
  const auto p = run(m, 0.03);
  ASSERT_LE(p.solved.k, 12);
  std::vector<double> start;
  for (auto v : p.initial.s0) start.push_back(static_cast<double>(v));
  const auto ref = oracles::powell_balance(m, fixtures::kernel(), 0.03, start);
  EXPECT_LE(ref.max_residual, 1e-12 * 0.03 * 0.03);
  const int n = p.solved.k;
  for (int i = 0; i < n; ++i) EXPECT_NEAR(ref.s[static_cast<std::size_t>(i)], static_cast<double>(p.solved.s[static_cast<std::size_t>(i)]), 1e-9) << i;
}

TEST(DiscreteSolver, TranslationShiftsEveryPosition) {
  const double delta = 0.3;
  const auto p = run(fixtures::symmetric_model().shifted(delta), 0.01);
  ASSERT_EQ(p.solved.s.size(), base().solved.s.size());
  for (std::size_t i = 0; i < p.solved.s.size(); ++i)
    EXPECT_NEAR(static_cast<double>(p.solved.s[i] - base().solved.s[i]), delta, 1e-10) << i;
}

TEST(DiscreteSolver, AsymmetricGeometryConverges) {
  const auto m = CurvatureModel::family(1.0, 1.0, 20.0, 6.0);
  const auto p = run(m, 5e-3);
  EXPECT_LE(p.solved.max_residual, Real(1e-12) * p.solved.eps * p.solved.eps);
  EXPECT_NE(p.solved.path, SolvePath::None);
}

TEST(DiscreteSolver, ReportsNoConvergenceWhenBothPathsAreDenied) {
  SolveOptions opt;
  opt.allow_staged = false;
  opt.max_newton = 0;
  try {
    solve_corrections(base().initial, fixtures::kernel(), fixtures::symmetric_model(), opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoConvergence);
  }
}

TEST(DiscreteSolver, ConfigurationFileRoundTrip) {
  const auto& c = base().solved;
  const auto path = (std::filesystem::temp_directory_path() / "spikechain_config_test.tsv").string();
  write_configuration(path, c);
  const auto t = io::read_table(path);
  const auto s = t.column_values_ld("s");
  ASSERT_EQ(s.size(), c.s.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i], c.s[i]);
  EXPECT_EQ(t.get("solve_path"), "staged");
  std::filesystem::remove(path);
}
