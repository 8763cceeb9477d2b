#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "cigen/numerics.hpp"

namespace cigen {

// Dependence statistics rho(X, Y). Larger values are always more extreme.

enum class StatKind { distance_correlation, pearson, mmd_rbf, ks_independence, rdc };

// CLI spelling: dcor | pearson | mmd | ks | rdc.
std::string_view to_string(StatKind kind);
StatKind parse_stat_kind(std::string_view name);

struct StatValue {
  double value = 0.0;
  bool degenerate = false;  // a constant input made the statistic undefined; value is 0
};

struct RdcOptions {
  Index features = 5;
  double scale = 1.0 / 6.0;
};

struct StatOptions {
  RdcOptions rdc;
};

// A statistic with Y (and any seeded randomness) fixed in advance; the
// engine binds once and evaluates the observed X and every null draw.
class BoundStatistic {
 public:
  virtual ~BoundStatistic() = default;
  virtual StatValue evaluate(const Matrix& x) const = 0;
};

std::unique_ptr<BoundStatistic> bind_statistic(StatKind kind, const Matrix& y, const StatOptions& options,
                                               std::uint64_t seed);

// bind_statistic(kind, y, options, seed)->evaluate(x).
StatValue compute_statistic(StatKind kind, const Matrix& x, const Matrix& y, const StatOptions& options,
                            std::uint64_t seed);

// Biased (V-statistic) distance correlation in [0, 1]. Requires n >= 2.
StatValue distance_correlation(const Matrix& x, const Matrix& y);

// Signed sample correlation; throws DegenerateInputError on constant input.
double pearson(const Vector& x, const Vector& y);

// Squared MMD with a Gaussian kernel exp(-|a-b|^2 / (2 h^2)), V-statistic.
// Identical arguments give exactly 0.
double two_sample_mmd(const Matrix& a, const Matrix& b, double bandwidth);

// Median Euclidean distance over all unordered row pairs.
double median_pairwise_distance(const Matrix& points);

// MMD^2 between the paired sample (x_i, y_i) and the decoupled sample
// (x_i, y_sigma(i)); sigma is drawn from seed. Requires n >= 4.
StatValue mmd_dependence(const Matrix& x, const Matrix& y, std::uint64_t seed);

// sup over the sample grid of |F_xy(s, t) - F_x(s) F_y(t)|. Univariate inputs.
StatValue ks_independence(const Vector& x, const Vector& y);

// Randomized dependence coefficient: empirical-CDF copula, random sine
// features, largest canonical correlation.
StatValue rdc(const Matrix& x, const Matrix& y, const RdcOptions& options, std::uint64_t seed);

// Same with explicit projection weights ((d + 1) x k each; last row is the bias).
StatValue rdc_with_weights(const Matrix& x, const Matrix& y, const Matrix& x_weights, const Matrix& y_weights);

// The projection weights rdc() draws for a block of dimension d.
Matrix rdc_projection_weights(Index d, const RdcOptions& options, std::uint64_t seed, bool y_block);

// Column-wise empirical CDF values F_n(u_i) = #{j : u_j <= u_i} / n.
Matrix copula_transform(const Matrix& m);

}  // namespace cigen
