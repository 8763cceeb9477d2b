#include <gtest/gtest.h>

#include <algorithm>

#include "cigen/crt.hpp"
#include "cigen/error.hpp"
#include "cigen/rng.hpp"
#include "cigen/synth.hpp"
#include "support.hpp"

namespace cigen {
namespace {

using testing::gaussian_matrix;

TEST(FitGaussianConditional, ExactLinearRecovery) {
  const Matrix z = gaussian_matrix(200, 1, 1);
  const Vector x = (2.0 * z.col(0)).array() + 1.0;
  const auto ridge = fit_gaussian_conditional(x, z);
  EXPECT_NEAR(ridge.beta(0), 2.0, 1e-2);
  EXPECT_NEAR(ridge.intercept, 1.0, 1e-2);
  const auto exact = fit_gaussian_conditional(x, z, 1e-12);
  EXPECT_EQ(exact.residual_std, kResidualStdFloor);
}

TEST(FitGaussianConditional, ConstantZ) {
  const Matrix z = Matrix::Constant(50, 2, 3.0);
  const Vector x = gaussian_matrix(50, 1, 2).col(0);
  const auto m = fit_gaussian_conditional(x, z);
  EXPECT_NEAR(m.beta.norm(), 0.0, 1e-12);
  EXPECT_NEAR(m.intercept, x.mean(), 1e-12);
  EXPECT_NEAR(m.effective_df, 1.0, 1e-12);
}

TEST(FitGaussianConditional, MatchesNormalEquations) {
  const Matrix z = gaussian_matrix(80, 4, 3);
  const Vector x = gaussian_matrix(80, 1, 4).col(0) + z.col(1);
  const double lambda = 2.5;
  const auto m = fit_gaussian_conditional(x, z, lambda);
  // Ridge on centred data with an unpenalised intercept.
  const Eigen::MatrixXd zc = z.rowwise() - z.colwise().mean();
  const Vector xc = x.array() - x.mean();
  const Eigen::MatrixXd gram = zc.transpose() * zc + lambda * Eigen::MatrixXd::Identity(4, 4);
  const Vector beta = gram.ldlt().solve(zc.transpose() * xc);
  EXPECT_LT((m.beta - beta).norm(), 1e-10);
  const Eigen::MatrixXd hat = zc * gram.inverse() * zc.transpose();
  EXPECT_NEAR(m.effective_df, 1.0 + hat.trace(), 1e-10);
  const Vector resid = xc - zc * beta;
  EXPECT_NEAR(m.residual_std, std::sqrt(resid.squaredNorm() / (80.0 - m.effective_df)), 1e-10);
}

TEST(FitGaussianConditional, ResidualScaleRecovery) {
  int inside = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Matrix z = gaussian_matrix(1000, 10, 100 + s);
    const Vector beta = gaussian_matrix(10, 1, 200 + s).col(0);
    const Vector x = z * beta + gaussian_matrix(1000, 1, 300 + s, 0.5).col(0);
    const double sd = fit_gaussian_conditional(x, z).residual_std;
    inside += sd >= 0.45 && sd <= 0.55;
  }
  EXPECT_GE(inside, 95);
}

TEST(FitGaussianConditional, Errors) {
  EXPECT_THROW(fit_gaussian_conditional(Vector::Zero(5), Matrix::Zero(4, 1)), ShapeError);
  EXPECT_THROW(fit_gaussian_conditional(Vector::Zero(1), Matrix::Zero(1, 1)), DegenerateInputError);
  EXPECT_THROW(fit_gaussian_conditional(Vector::Zero(5), Matrix::Zero(5, 1), 0.0), ConfigError);
}

TEST(GaussianConditionalSampler, DrawsFollowTheModel) {
  GaussianConditional m;
  m.beta = Vector::Constant(2, 1.0);
  m.intercept = -1.0;
  m.residual_std = 0.5;
  const GaussianConditionalSampler s(m);
  const Matrix z = gaussian_matrix(4000, 2, 5);
  const Matrix draw = s.sample(z, 6);
  const Vector resid = draw.col(0) - (z * m.beta).array().matrix() - Vector::Constant(4000, -1.0);
  std::vector<double> u;
  for (Index i = 0; i < resid.size(); ++i) u.push_back(testing::normal_cdf(resid(i) / 0.5));
  EXPECT_GT(testing::uniformity_p_value(u), 0.01);
  EXPECT_EQ(draw, s.sample(z, 6));
  EXPECT_THROW(s.sample(gaussian_matrix(3, 3, 1), 1), ShapeError);
}

TEST(CrtTest, RejectsMultivariateX) {
  const Dataset d{gaussian_matrix(50, 2, 1), gaussian_matrix(50, 1, 2), gaussian_matrix(50, 1, 3), ""};
  EXPECT_THROW(crt_test(d, {}), UnsupportedBaselineError);
}

TEST(CrtTest, SharesTheRandomizationPath) {
  SynthSpec spec;
  spec.n = 150;
  const Dataset d = generate(spec);
  TestConfig c;
  c.m_null_samples = 40;
  c.seed = 3;
  const auto crt = crt_test(d, c);
  const GaussianConditionalSampler s(fit_gaussian_conditional(d.x.col(0), d.z));
  const auto direct = run_randomization_test(d, s, c, "crt");
  EXPECT_EQ(crt.null_stats, direct.null_stats);
  EXPECT_EQ(crt.p_value, direct.p_value);
  EXPECT_EQ(crt.method, "crt");
  EXPECT_FALSE(crt.bound_diagnostic.has_value());
}

TEST(CrtTest, SingleDraw) {
  SynthSpec spec;
  spec.n = 60;
  const Dataset d = generate(spec);
  TestConfig c;
  c.m_null_samples = 1;
  const double p = crt_test(d, c).p_value;
  EXPECT_TRUE(p == 0.5 || p == 1.0);
}

TEST(CrtTest, SuperUniformUnderCorrectSpecification) {
  const std::size_t reps = 300;
  std::size_t rejections = 0;
  for (std::uint64_t r = 0; r < reps; ++r) {
    SynthSpec spec;
    spec.n = 200;
    spec.dz = 5;
    spec.seed = derive_seed(21, {r});
    TestConfig c;
    c.statistic = StatKind::pearson;
    c.m_null_samples = 99;
    c.seed = r;
    rejections += crt_test(generate(spec), c).reject;
  }
  EXPECT_LE(static_cast<double>(rejections) / reps, 0.05 + 2.0 * testing::binomial_se(0.05, reps));
}

TEST(CrtTest, TypeOneErrorOnLinearGaussianNull) {
  const std::size_t reps = 200;
  std::size_t rejections = 0;
  for (std::uint64_t r = 0; r < reps; ++r) {
    SynthSpec spec;
    spec.n = 500;
    spec.dz = 10;
    spec.seed = derive_seed(22, {r});
    TestConfig c;
    c.seed = r;
    rejections += crt_test(generate(spec), c).reject;
  }
  const double rate = static_cast<double>(rejections) / reps;
  EXPECT_GE(rate, 0.02);
  EXPECT_LE(rate, 0.09);
}

}  // namespace
}  // namespace cigen
