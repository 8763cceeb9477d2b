#include <gtest/gtest.h>

#include <cmath>

#include "cigen/bench.hpp"
#include "cigen/crt.hpp"
#include "cigen/error.hpp"
#include "support.hpp"

namespace cigen {
namespace {

using testing::gaussian_matrix;

std::vector<double> values(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

TEST(TvLowerBound, IdenticalSamples) {
  const auto v = values(gaussian_matrix(500, 1, 1));
  const auto r = tv_lower_bound(v, v, 20);
  EXPECT_EQ(r.tv, 0.0);
  EXPECT_EQ(r.error_sum_bound, 1.0);
}

TEST(TvLowerBound, DisjointSupports) {
  const std::vector<double> a{0.0, 0.1, 0.2}, b{5.0, 5.5, 6.0};
  EXPECT_DOUBLE_EQ(tv_lower_bound(a, b, 10).tv, 1.0);
}

TEST(TvLowerBound, ShiftedGaussians) {
  const auto a = values(gaussian_matrix(100000, 1, 2));
  const Matrix bm = gaussian_matrix(100000, 1, 3).array() + 1.0;
  const double truth = 2.0 * testing::normal_cdf(0.5) - 1.0;
  EXPECT_NEAR(tv_lower_bound(a, values(bm), 100).tv, truth, 0.02);
}

TEST(TvLowerBound, SymmetricAndBounded) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = values(gaussian_matrix(300, 1, 10 + s));
    const auto b = values(gaussian_matrix(200, 1, 40 + s, 2.0));
    const double ab = tv_lower_bound(a, b, 15).tv;
    EXPECT_EQ(ab, tv_lower_bound(b, a, 15).tv);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(TvLowerBound, Errors) {
  const std::vector<double> a{1.0, 2.0}, empty;
  EXPECT_THROW(tv_lower_bound(a, empty, 10), DegenerateInputError);
  EXPECT_THROW(tv_lower_bound(a, a, 1), ConfigError);
  const std::vector<double> bad{1.0, std::nan("")};
  EXPECT_THROW(tv_lower_bound(a, bad, 10), DegenerateInputError);
}

BenchPlan small_plan() {
  BenchPlan p;
  p.methods = {Method::gcit, Method::crt};
  p.settings = {Setting::gaussian};
  p.hypotheses = {Hypothesis::h0};
  p.dz = {3};
  p.n = 120;
  p.replications = 4;
  p.m_null_samples = 30;
  p.gan.iterations = 100;
  p.seed = 17;
  return p;
}

TEST(BenchPlan, Validation) {
  BenchPlan p = small_plan();
  EXPECT_NO_THROW(validate(p));
  p.dz.clear();
  EXPECT_THROW(validate(p), ConfigError);
  p = small_plan();
  p.lambdas = {-1.0};
  EXPECT_THROW(validate(p), ConfigError);
  p = small_plan();
  p.tv_bins = 1;
  EXPECT_THROW(validate(p), ConfigError);
  EXPECT_EQ(parse_method("oracle"), Method::oracle);
  EXPECT_THROW(parse_method("kcit"), ConfigError);
}

TEST(RunPlan, SingleReplicationSingleCell) {
  BenchPlan p = small_plan();
  p.methods = {Method::crt};
  p.replications = 1;
  const auto t = run_plan(p);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_TRUE(t.rows[0].rate == 0.0 || t.rows[0].rate == 1.0);
  EXPECT_FALSE(t.rows[0].error.has_value());
}

TEST(RunPlan, RowOrderAndEcho) {
  BenchPlan p = small_plan();
  p.hypotheses = {Hypothesis::h0, Hypothesis::h1};
  p.lambdas = {0.0, 5.0};
  p.replications = 2;
  p.mi_band.reset();
  const auto t = run_plan(p);
  ASSERT_EQ(t.rows.size(), 6u);  // 2 hypotheses x (2 gcit lambdas + crt)
  EXPECT_EQ(t.rows[0].method, Method::gcit);
  EXPECT_EQ(t.rows[0].lambda, 0.0);
  EXPECT_EQ(t.rows[1].lambda, 5.0);
  EXPECT_EQ(t.rows[2].method, Method::crt);
  EXPECT_EQ(t.rows[3].hypothesis, Hypothesis::h1);
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.n, 120u);
    EXPECT_EQ(r.dz, 3u);
    EXPECT_EQ(r.replications, 2u);
    EXPECT_EQ(r.method == Method::gcit, r.mean_bound_diagnostic.has_value());
  }
}

TEST(RunPlan, WorkerCountInvariance) {
  BenchPlan p = small_plan();
  const auto a = run_plan(p);
  p.workers = 3;
  const auto b = run_plan(p);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].rejections, b.rows[i].rejections);
    EXPECT_EQ(a.rows[i].rate, b.rows[i].rate);
    EXPECT_EQ(a.rows[i].mean_bound_diagnostic, b.rows[i].mean_bound_diagnostic);
    EXPECT_EQ(a.rows[i].mean_tv, b.rows[i].mean_tv);
  }
}

// Each replication is a plain test on data regenerated from the published seeds.
TEST(RunPlan, ComposesFromSingleTests) {
  BenchPlan p = small_plan();
  const auto table = run_plan(p);
  const SynthSpec cell = cell_spec(p, Setting::gaussian, Hypothesis::h0, 3);
  std::size_t gcit = 0, crt = 0;
  for (std::size_t r = 0; r < p.replications; ++r) {
    const auto seeds = replication_seeds(p, Setting::gaussian, Hypothesis::h0, 3, r);
    const Dataset data = replication_draw(cell, seeds.data).data;
    gcit += gcit_test(data, plan_test_config(p, 0.0, seeds.test)).reject;
    crt += crt_test(data, plan_test_config(p, 0.0, seeds.test)).reject;
  }
  EXPECT_EQ(table.rows[0].rejections, gcit);
  EXPECT_EQ(table.rows[1].rejections, crt);
}

TEST(RunPlan, OracleH0CellsAreCalibrated) {
  BenchPlan p;
  p.methods = {Method::oracle};
  p.settings = {Setting::gaussian, Setting::laplace, Setting::arbitrary};
  p.hypotheses = {Hypothesis::h0};
  p.dz = {5, 25};
  p.n = 150;
  p.replications = 200;
  p.m_null_samples = 99;
  p.seed = 3;
  const auto t = run_plan(p);
  ASSERT_EQ(t.rows.size(), 6u);
  const double tolerance = 2.0 * testing::binomial_se(0.05, 200);
  for (const auto& r : t.rows) {
    EXPECT_NEAR(r.rate, 0.05, tolerance) << to_string(r.setting) << " dz=" << r.dz;
  }
}

TEST(RunPlan, FailingCellsCarryAnError) {
  BenchPlan p = small_plan();
  p.methods = {Method::crt};
  p.hypotheses = {Hypothesis::h1};
  p.mi_band = MiBand{40.0, 50.0};  // unreachable
  p.max_redraws = 2;
  p.replications = 3;
  const auto t = run_plan(p);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_TRUE(t.rows[0].error.has_value());
  EXPECT_EQ(t.rows[0].failures, 3u);
}

TEST(LambdaSweep, ZeroRowEqualsPlainGcit) {
  BenchPlan p = small_plan();
  p.mi_band.reset();
  p.replications = 2;
  const std::vector<double> grid{0.0, 10.0};
  const auto sweep = lambda_sweep(p, grid);
  ASSERT_EQ(sweep.rows.size(), 4u);  // H0 and H1, two lambdas each
  BenchPlan plain = p;
  plain.methods = {Method::gcit};
  plain.hypotheses = {Hypothesis::h0, Hypothesis::h1};
  plain.lambdas = {0.0};
  const auto base = run_plan(plain);
  EXPECT_EQ(sweep.rows[0].rejections, base.rows[0].rejections);
  EXPECT_EQ(sweep.rows[0].mean_bound_diagnostic, base.rows[0].mean_bound_diagnostic);
  EXPECT_EQ(sweep.rows[2].mean_bound_diagnostic, base.rows[1].mean_bound_diagnostic);
  EXPECT_EQ(sweep.rows[3].lambda, 10.0);
}

}  // namespace
}  // namespace cigen
