#include <gtest/gtest.h>

#include <cmath>

#include "tvvar/montecarlo.hpp"

using namespace tvvar;

TEST(MonteCarlo, SummarizePoolsReplications) {
  McReplication a, b, bad;
  a.ok = b.ok = true;
  a.p_hat = 2;
  b.p_hat = 3;
  a.h = 0.2;
  b.h = 0.4;
  a.sq_err_A = 4.0;
  b.sq_err_A = 12.0;
  a.points = b.points = 2;
  a.sq_err_Omega = 1.0;
  b.sq_err_Omega = 3.0;
  a.covered_A = 9;
  a.total_A = 10;
  b.covered_A = 7;
  b.total_A = 10;
  a.covered_Omega = 3;
  a.total_Omega = 3;
  b.covered_Omega = 0;
  b.total_Omega = 3;
  bad.error = "boom";
  const McCell cell = summarize(100, 2, {a, bad, b});
  EXPECT_EQ(cell.replications, 2);
  EXPECT_EQ(cell.failed, 1);
  ASSERT_EQ(cell.failure_messages.size(), 1u);
  EXPECT_EQ(cell.failure_messages[0], "boom");
  EXPECT_DOUBLE_EQ(cell.freq_equal, 0.5);
  EXPECT_DOUBLE_EQ(cell.freq_over, 0.5);
  EXPECT_DOUBLE_EQ(cell.freq_under, 0.0);
  EXPECT_DOUBLE_EQ(cell.rmse_A, 2.0);
  EXPECT_DOUBLE_EQ(cell.rmse_Omega, 1.0);
  EXPECT_DOUBLE_EQ(cell.coverage_A, 0.8);
  EXPECT_DOUBLE_EQ(cell.coverage_Omega, 0.5);
  EXPECT_DOUBLE_EQ(cell.mean_bandwidth, 0.3);
}

TEST(MonteCarlo, SmallRunIsCoherent) {
  const McReport rep = run_monte_carlo(appendix_b1_path(), {150, 200}, 6, 11);
  ASSERT_EQ(rep.cells.size(), 2u);
  EXPECT_EQ(rep.true_p, 2);
  for (const McCell& c : rep.cells) {
    EXPECT_EQ(c.replications + c.failed, 6);
    EXPECT_NEAR(c.freq_under + c.freq_equal + c.freq_over, 1.0, 1e-12);
    EXPECT_GT(c.rmse_A, 0.0);
    EXPECT_GE(c.coverage_A, 0.0);
    EXPECT_LE(c.coverage_A, 1.0);
    EXPECT_GE(c.coverage_Omega, 0.0);
    EXPECT_LE(c.coverage_Omega, 1.0);
  }
  EXPECT_EQ(rep.cells[1].stream_base, std::uint64_t{1} << 32);
}

TEST(MonteCarlo, IndependentOfThreadCount) {
  set_max_threads(1);
  const McReport a = run_monte_carlo(appendix_b1_path(), {120}, 4, 3);
  set_max_threads(4);
  const McReport b = run_monte_carlo(appendix_b1_path(), {120}, 4, 3);
  set_max_threads(0);
  EXPECT_EQ(a.cells[0].rmse_A, b.cells[0].rmse_A);
  EXPECT_EQ(a.cells[0].coverage_Omega, b.cells[0].coverage_Omega);
  EXPECT_EQ(a.cells[0].freq_equal, b.cells[0].freq_equal);
}

TEST(MonteCarlo, ConstantVarIsScoredAgainstTruth) {
  VarCoefficients c;
  c.a = Vec::Zero(2);
  c.a << 0.2, -0.1;
  c.lags = {(Mat(2, 2) << 0.5, 0.1, -0.2, 0.4).finished()};
  c.omega = Mat::Identity(2, 2);
  McOptions opt;
  opt.selection.fixed_bandwidth = 0.5;
  opt.selection.max_lag = 3;
  const McReplication r = run_replication(constant_path(c), 2000, 5, 0, opt);
  ASSERT_TRUE(r.ok) << r.error;
  EXPECT_EQ(r.p_hat, 1);
  EXPECT_LT(std::sqrt(r.sq_err_A / r.points), 0.15);
  EXPECT_GT(static_cast<double>(r.covered_A) / r.total_A, 0.6);
}

TEST(MonteCarlo, ExcludeBoundaryDropsPoints) {
  McOptions opt;
  opt.selection.fixed_bandwidth = 0.2;
  opt.selection.max_lag = 3;
  const McReplication all = run_replication(appendix_b1_path(), 200, 7, 1, opt);
  opt.exclude_boundary = true;
  const McReplication inner = run_replication(appendix_b1_path(), 200, 7, 1, opt);
  ASSERT_TRUE(all.ok && inner.ok);
  EXPECT_LT(inner.points, all.points);
  EXPECT_GT(inner.points, all.points / 2);
}

TEST(MonteCarlo, FailedReplicationIsRecorded) {
  McOptions opt;
  opt.selection.fixed_bandwidth = 0.005;
  const McReplication r = run_replication(appendix_b1_path(), 60, 1, 0, opt);
  EXPECT_FALSE(r.ok);
  EXPECT_FALSE(r.error.empty());
  EXPECT_THROW(run_monte_carlo(appendix_b1_path(), {100}, 0, 1), ConfigError);
}
