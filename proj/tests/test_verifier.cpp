#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"

using namespace spikechain;

TEST(Verifier, EvennessIntegralCancelsForEqualDistances) {
  const auto& g = fixtures::profile();
  const auto same = check_evenness(g, 8.0, 8.0);
  const auto near = check_evenness(g, 8.0, 8.01);
  EXPECT_LE(std::fabs(same.I), 1e-10 * std::fabs(near.I / 0.01));
  EXPECT_EQ(same.ratio, 0.0);
}

TEST(Verifier, EvennessIntegralIsLinearInTheOffset) {
  const auto& g = fixtures::profile();
  const auto a = check_evenness(g, 10.0, 10.01);
  const auto b = check_evenness(g, 10.0, 10.02);
  EXPECT_NEAR(b.I / a.I, 2.0, 0.05);
  std::vector<double> ratios;
  for (double q = 8.0; q <= 12.0; q += 1.0) ratios.push_back(check_evenness(g, q, q + 0.05).ratio);
  EXPECT_LE(stability_ratio(ratios), 1.5);
  EXPECT_THROW(check_evenness(g, -1.0, 2.0), Error);
}

TEST(Verifier, MidpointRuleIsExactForLinearIntegrands) {
  const auto c = midpoint_rule_errors([](double) { return 3.0; }, 0.1, 20);
  EXPECT_LE(c.max_error, 1e-14);
  const auto l = midpoint_rule_errors([](double t) { return 2.0 - 5.0 * t; }, 0.05, 40);
  EXPECT_LE(l.max_error, 1e-14);
  ASSERT_EQ(l.errors.size(), 40u);
}

TEST(Verifier, MidpointRuleErrorIsSecondOrder) {
  auto f = [](double t) { return std::sin(3.0 * t); };
  std::vector<double> hs, errs;
  for (int n : {10, 20, 40, 80}) {
    hs.push_back(1.0 / n);
    errs.push_back(midpoint_rule_errors(f, 1.0 / n, static_cast<std::size_t>(n)).max_error);
  }
  EXPECT_NEAR(loglog_slope(hs, errs), 2.0, 0.05);
}

TEST(Verifier, FitHelpers) {
  EXPECT_DOUBLE_EQ(stability_ratio({1.0, -4.0, 2.0}), 4.0);
  EXPECT_TRUE(std::isinf(stability_ratio({1.0, 0.0})));
  EXPECT_TRUE(std::isinf(stability_ratio({})));
  EXPECT_NEAR(loglog_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}), 2.0, 1e-14);
  EXPECT_TRUE(strictly_decreasing({3.0, 2.0, 1.0}));
  EXPECT_FALSE(strictly_decreasing({3.0, 3.0}));
  EXPECT_TRUE(is_reflection_symmetric(fixtures::symmetric_model()));
  EXPECT_FALSE(is_reflection_symmetric(CurvatureModel::family(1.0, 1.0, 20.0, 5.0)));
}

TEST(Verifier, ManifestNamesAreUnique) {
  std::set<std::string> names;
  for (const auto& e : check_manifest()) EXPECT_TRUE(names.insert(e.name).second) << e.name;
  EXPECT_EQ(names.size(), check_manifest().size());
}

TEST(Verifier, SingleEpsReportOmitsFits) {
  SweepInput in;
  in.profile = &fixtures::profile();
  in.kernel = &fixtures::kernel();
  in.model = fixtures::symmetric_model();
  in.eps = {0.01};
  const auto rep = run_sweep(in);
  ASSERT_EQ(rep.runs.size(), 1u);
  EXPECT_TRUE(rep.runs[0].ok) << rep.runs[0].error;
  std::size_t expected = 0;
  for (const auto& e : check_manifest())
    if (!e.fit_only) ++expected;
  EXPECT_EQ(rep.checks.size(), expected);
  for (const auto& c : rep.checks) EXPECT_NE(c.status, CheckStatus::NotApplicable) << c.name;
  EXPECT_EQ(rep.find("residual_exactness")->status, CheckStatus::Pass);
  EXPECT_EQ(rep.find("x0_scaling"), nullptr);
}

TEST(Verifier, CheckSelectionAndDeterministicJson) {
  SweepInput in;
  in.profile = &fixtures::profile();
  in.kernel = &fixtures::kernel();
  in.model = fixtures::symmetric_model();
  in.eps = {0.005, 0.01};
  in.checks = {"residual_exactness", "end_gaps", "midpoint_rule"};
  in.threads = 2;
  const auto a = run_sweep(in);
  ASSERT_EQ(a.checks.size(), 3u);
  EXPECT_EQ(a.eps.front(), 0.01);
  in.threads = 1;
  const auto b = run_sweep(in);
  EXPECT_EQ(report_json(a).dump(), report_json(b).dump());
  EXPECT_NE(report_text(a).find("midpoint_rule"), std::string::npos);
}

TEST(Verifier, RejectedGeometryAbortsTheSweep) {
  SweepInput in;
  in.profile = &fixtures::profile();
  in.kernel = &fixtures::kernel();
  in.model = CurvatureModel::polynomial(1.0, {1.0, 0.1, 20.0}, 0.5);
  in.eps = {0.01};
  try {
    run_sweep(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("mismatch"), std::string::npos);
  }
}

TEST(Verifier, FailedRunIsReportedNotThrown) {
  const auto& full = fixtures::kernel();
  std::vector<double> s(full.s_grid().begin(), full.s_grid().begin() + 41);
  std::vector<double> psi(full.psi_values().begin(), full.psi_values().begin() + 41);
  const auto narrow = make_kernel(fixtures::profile(), s, psi, full.nu2(), full.quadrature_spec());
  const auto run = run_eps(fixtures::symmetric_model(), narrow, 0.01);
  EXPECT_FALSE(run.ok);
  EXPECT_NE(run.error.find("KernelRangeExceeded"), std::string::npos) << run.error;
}
