#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cigen/error.hpp"
#include "cigen/rng.hpp"
#include "cigen/stats.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace cigen {
namespace {

using testing::gaussian_matrix;
using testing::uniform_matrix;

std::vector<std::size_t> mmd_permutation(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(derive_seed(seed, {0x6d6d64}));
  return random_permutation(n, rng);
}

Index small_n(int instance) { return 4 + instance % 5; }  // 4..8

TEST(StatOracle, DistanceCorrelationMatchesDefinition) {
  for (int t = 0; t < 100; ++t) {
    const Index n = small_n(t), dx = 1 + t % 3, dy = 1 + (t / 3) % 2;
    const Matrix x = gaussian_matrix(n, dx, 1000 + t);
    const Matrix y = gaussian_matrix(n, dy, 2000 + t);
    EXPECT_NEAR(distance_correlation(x, y).value, oracle::dcor(x, y), 1e-10) << "instance " << t;
  }
}

TEST(StatOracle, PearsonMatchesDefinition) {
  for (int t = 0; t < 100; ++t) {
    const Index n = small_n(t);
    const Matrix x = gaussian_matrix(n, 1, 3000 + t);
    const Matrix y = gaussian_matrix(n, 1, 4000 + t);
    const double v = compute_statistic(StatKind::pearson, x, y, {}, 0).value;
    EXPECT_NEAR(v, oracle::abs_pearson(x.col(0), y.col(0)), 1e-10) << "instance " << t;
  }
}

TEST(StatOracle, MmdMatchesDefinition) {
  for (int t = 0; t < 100; ++t) {
    const Index n = small_n(t), dx = 1 + t % 2;
    const Matrix x = gaussian_matrix(n, dx, 5000 + t);
    const Matrix y = gaussian_matrix(n, 1, 6000 + t);
    const std::uint64_t seed = 70 + t;
    const double expected = oracle::mmd_dependence(x, y, mmd_permutation(static_cast<std::size_t>(n), seed));
    EXPECT_NEAR(mmd_dependence(x, y, seed).value, expected, 1e-10) << "instance " << t;
  }
}

TEST(StatOracle, KsMatchesDefinition) {
  for (int t = 0; t < 100; ++t) {
    const Index n = small_n(t);
    Matrix x = gaussian_matrix(n, 1, 7000 + t);
    const Matrix y = gaussian_matrix(n, 1, 8000 + t);
    if (t % 4 == 0) x(0, 0) = x(1, 0);  // ties
    EXPECT_NEAR(ks_independence(x.col(0), y.col(0)).value, oracle::ks_dependence(x.col(0), y.col(0)), 1e-10)
        << "instance " << t;
  }
}

TEST(StatOracle, RdcMatchesDefinition) {
  for (int t = 0; t < 100; ++t) {
    const Index n = 6 + t % 3, dx = 1 + t % 2;
    const Matrix x = gaussian_matrix(n, dx, 9000 + t);
    const Matrix y = gaussian_matrix(n, 1, 9500 + t);
    const Matrix wx = gaussian_matrix(dx + 1, 2, 9700 + t, 2.0);
    const Matrix wy = gaussian_matrix(2, 2, 9800 + t, 2.0);
    EXPECT_NEAR(rdc_with_weights(x, y, wx, wy).value, oracle::rdc(x, y, wx, wy), 1e-10) << "instance " << t;
  }
}

TEST(StatOracle, RdcUsesItsDocumentedProjections) {
  RdcOptions opts;
  opts.features = 2;
  opts.scale = 2.0;
  const Matrix x = gaussian_matrix(8, 2, 1);
  const Matrix y = gaussian_matrix(8, 1, 2);
  const double direct = rdc(x, y, opts, 9).value;
  const double explicit_weights =
      rdc_with_weights(x, y, rdc_projection_weights(2, opts, 9, false), rdc_projection_weights(1, opts, 9, true)).value;
  EXPECT_EQ(direct, explicit_weights);
}

TEST(DistanceCorrelation, FivePointExample) {
  Matrix x(5, 1), y(5, 1);
  x << 1, 2, 3, 4, 5;
  y << 2, 1, 5, 4, 3;
  EXPECT_NEAR(distance_correlation(x, y).value, oracle::dcor(x, y), 1e-12);
}

TEST(DistanceCorrelation, SelfDependenceIsOne) {
  const Matrix x = gaussian_matrix(30, 1, 3);
  EXPECT_NEAR(distance_correlation(x, x).value, 1.0, 1e-12);
}

TEST(DistanceCorrelation, ConstantInputIsDegenerate) {
  const auto v = distance_correlation(Matrix::Constant(10, 1, 2.0), gaussian_matrix(10, 1, 4));
  EXPECT_EQ(v.value, 0.0);
  EXPECT_TRUE(v.degenerate);
}

TEST(DistanceCorrelation, AffineInvariance) {
  for (int t = 0; t < 20; ++t) {
    const Matrix x = gaussian_matrix(40, 2, 100 + t);
    const Matrix y = gaussian_matrix(40, 1, 200 + t) + x.col(0) * 0.5;
    const Matrix xa = (3.5 * x).array() - 7.0;
    const Matrix ya = (0.25 * y).array() + 11.0;
    EXPECT_NEAR(distance_correlation(xa, ya).value, distance_correlation(x, y).value, 1e-10);
  }
}

TEST(DistanceCorrelation, RequiresTwoRows) {
  EXPECT_THROW(distance_correlation(Matrix::Zero(1, 1), Matrix::Zero(1, 1)), DegenerateInputError);
  EXPECT_THROW(distance_correlation(Matrix::Zero(3, 1), Matrix::Zero(4, 1)), ShapeError);
}

TEST(Pearson, Examples) {
  Vector x(4), y(4);
  x << 1, 2, 3, 4;
  y << 1, 3, 2, 4;
  EXPECT_NEAR(pearson(x, y), 0.8, 1e-12);
  EXPECT_NEAR(pearson(x, (2.0 * x).array() + 3.0), 1.0, 1e-12);
  EXPECT_NEAR(pearson(x, -x), -1.0, 1e-12);
  EXPECT_NEAR(compute_statistic(StatKind::pearson, Matrix(x), Matrix(-x), {}, 0).value, 1.0, 1e-12);
  EXPECT_THROW(pearson(x, Vector::Constant(4, 1.0)), DegenerateInputError);
}

TEST(Mmd, IdenticalSamplesGiveExactlyZero) {
  const Matrix a = gaussian_matrix(50, 3, 5);
  EXPECT_EQ(two_sample_mmd(a, a, 0.7), 0.0);
  EXPECT_EQ(two_sample_mmd(a, a, median_pairwise_distance(a)), 0.0);
}

TEST(Mmd, MedianDistance) {
  Matrix p(3, 1);
  p << 0, 1, 3;  // distances 1, 2, 3
  EXPECT_DOUBLE_EQ(median_pairwise_distance(p), 2.0);
  Matrix q(4, 1);
  q << 0, 1, 2, 10;  // 1,1,2,8,9,10
  EXPECT_DOUBLE_EQ(median_pairwise_distance(q), 5.0);
}

TEST(Mmd, IndependentSamplesStaySmall) {
  int small = 0;
  for (int s = 0; s < 40; ++s) {
    const Matrix x = gaussian_matrix(500, 1, 300 + s);
    const Matrix y = gaussian_matrix(500, 1, 400 + s);
    small += mmd_dependence(x, y, s).value < 0.05;
  }
  EXPECT_GE(small, 38);
}

TEST(Mmd, DependenceExceedsIndependence) {
  int wins = 0;
  for (int s = 0; s < 100; ++s) {
    const Matrix x = gaussian_matrix(500, 1, 500 + s);
    const Matrix dependent = x + gaussian_matrix(500, 1, 600 + s, 0.3);
    const Matrix independent = gaussian_matrix(500, 1, 700 + s);
    wins += mmd_dependence(x, dependent, s).value > mmd_dependence(x, independent, s).value;
  }
  EXPECT_GE(wins, 99);
}

TEST(Ks, TwoPointComonotone) {
  Vector x(2), y(2);
  x << 1, 2;
  y << 1, 2;
  EXPECT_DOUBLE_EQ(ks_independence(x, y).value, 0.25);
}

TEST(Ks, ConstantIsDegenerate) {
  const auto v = ks_independence(Vector::Constant(6, 1.0), gaussian_matrix(6, 1, 1).col(0));
  EXPECT_EQ(v.value, 0.0);
  EXPECT_TRUE(v.degenerate);
}

TEST(Ks, IndependentSamplesStaySmall) {
  int small = 0;
  for (int s = 0; s < 100; ++s) {
    small += ks_independence(gaussian_matrix(500, 1, 800 + s).col(0), gaussian_matrix(500, 1, 900 + s).col(0)).value < 0.08;
  }
  EXPECT_GE(small, 95);
}

TEST(Ks, RequiresUnivariateInput) {
  EXPECT_THROW(compute_statistic(StatKind::ks_independence, gaussian_matrix(5, 2, 1), gaussian_matrix(5, 1, 2), {}, 0),
               ConfigError);
}

TEST(Rdc, SelfDependence) {
  const Matrix x = gaussian_matrix(500, 1, 11);
  EXPECT_GE(rdc(x, x, {}, 1).value, 0.95);
}

TEST(Rdc, IndependentFloor) {
  double total = 0.0;
  for (int s = 0; s < 20; ++s) total += rdc(uniform_matrix(500, 1, 20 + s), uniform_matrix(500, 1, 40 + s), {}, s).value;
  EXPECT_LT(total / 20.0, 0.3);
}

TEST(Rdc, RankInvariance) {
  const Matrix x = gaussian_matrix(200, 1, 12);
  const Matrix y = gaussian_matrix(200, 1, 13) + x;
  const Matrix gx = x.array().cube() + 2.0 * x.array();
  EXPECT_EQ(rdc(x, y, {}, 4).value, rdc(gx, y, {}, 4).value);
}

TEST(Rdc, ConstantIsDegenerate) {
  const auto v = rdc(Matrix::Constant(20, 1, 3.0), gaussian_matrix(20, 1, 1), {}, 0);
  EXPECT_EQ(v.value, 0.0);
  EXPECT_TRUE(v.degenerate);
}

TEST(Statistics, RowPermutationSymmetry) {
  const Matrix x = gaussian_matrix(60, 1, 14);
  const Matrix y = gaussian_matrix(60, 1, 15) + 0.5 * x;
  Rng rng = make_rng(16);
  const auto perm = random_permutation(60, rng);
  const Matrix px = select_rows(x, perm), py = select_rows(y, perm);
  // The mmd decoupling permutation is tied to row positions, so mmd is
  // symmetric only in distribution and is left out here.
  for (StatKind k : {StatKind::distance_correlation, StatKind::pearson, StatKind::ks_independence, StatKind::rdc}) {
    EXPECT_NEAR(compute_statistic(k, x, y, {}, 3).value, compute_statistic(k, px, py, {}, 3).value, 1e-10)
        << to_string(k);
  }
}

TEST(Statistics, BoundMatchesDirect) {
  const Matrix x = gaussian_matrix(40, 1, 17);
  const Matrix y = gaussian_matrix(40, 1, 18) + x;
  for (StatKind k : {StatKind::distance_correlation, StatKind::pearson, StatKind::mmd_rbf, StatKind::ks_independence,
                     StatKind::rdc}) {
    const auto bound = bind_statistic(k, y, {}, 5);
    EXPECT_EQ(bound->evaluate(x).value, compute_statistic(k, x, y, {}, 5).value) << to_string(k);
  }
}

TEST(Statistics, NamesRoundTrip) {
  for (StatKind k : {StatKind::distance_correlation, StatKind::pearson, StatKind::mmd_rbf, StatKind::ks_independence,
                     StatKind::rdc}) {
    EXPECT_EQ(parse_stat_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_stat_kind("hsic"), ConfigError);
}

TEST(Copula, EmpiricalCdfValues) {
  Matrix m(4, 1);
  m << 3, 1, 2, 2;
  const Matrix u = copula_transform(m);
  EXPECT_DOUBLE_EQ(u(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(u(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(u(2, 0), 0.75);
  EXPECT_DOUBLE_EQ(u(3, 0), 0.75);
}

}  // namespace
}  // namespace cigen
