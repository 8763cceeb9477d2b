#include "cigen/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "cigen/error.hpp"
#include "cigen/rng.hpp"

namespace cigen {

std::string_view to_string(StatKind kind) {
  switch (kind) {
    case StatKind::distance_correlation: return "dcor";
    case StatKind::pearson: return "pearson";
    case StatKind::mmd_rbf: return "mmd";
    case StatKind::ks_independence: return "ks";
    case StatKind::rdc: return "rdc";
  }
  return "dcor";
}

StatKind parse_stat_kind(std::string_view name) {
  if (name == "dcor" || name == "distance_correlation") return StatKind::distance_correlation;
  if (name == "pearson") return StatKind::pearson;
  if (name == "mmd") return StatKind::mmd_rbf;
  if (name == "ks") return StatKind::ks_independence;
  if (name == "rdc") return StatKind::rdc;
  throw ConfigError("unknown statistic '" + std::string(name) + "' (expected dcor|pearson|mmd|ks|rdc)");
}

namespace {

double row_distance(const Matrix& m, Index i, Index j) {
  if (m.cols() == 1) return std::abs(m(i, 0) - m(j, 0));
  return (m.row(i) - m.row(j)).norm();
}

// Double-centred pairwise distance matrix.
Matrix centered_distances(const Matrix& m) {
  const Index n = m.rows();
  Matrix d(n, n);
  for (Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = row_distance(m, i, j);
  }
  const Vector row_mean = d.rowwise().mean();
  const double grand = row_mean.mean();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) d(i, j) += grand - row_mean(i) - row_mean(j);
  }
  return d;
}

Vector as_vector(const Matrix& m, const char* what) {
  if (m.cols() != 1) throw ConfigError(std::string(what) + " requires univariate input");
  return m.col(0);
}

void require_rows(const Matrix& x, Index n) {
  if (x.rows() != n) throw ShapeError("statistic: x and y row counts differ");
}

class BoundDcor final : public BoundStatistic {
 public:
  explicit BoundDcor(const Matrix& y) : n_(y.rows()), centered_y_(centered_distances(y)) {
    var_y_ = centered_y_.cwiseAbs2().mean();
  }

  StatValue evaluate(const Matrix& x) const override {
    require_rows(x, n_);
    // With B double-centred, sum(A o B) = sum(a o B) and
    // sum(A o A) = sum(a^2) - 2n sum(rbar_i^2) + n^2 gbar^2 for raw distances a.
    double cross = 0.0;
    double square = 0.0;
    Vector row_sum = Vector::Zero(n_);
    for (Index i = 0; i < n_; ++i) {
      for (Index j = i + 1; j < n_; ++j) {
        const double a = row_distance(x, i, j);
        cross += a * centered_y_(i, j);
        square += a * a;
        row_sum(i) += a;
        row_sum(j) += a;
      }
    }
    const double nn = static_cast<double>(n_) * static_cast<double>(n_);
    const Vector row_mean = row_sum / static_cast<double>(n_);
    const double grand = row_sum.sum() / nn;
    const double dcov2 = 2.0 * cross / nn;
    const double var_x =
        (2.0 * square - 2.0 * static_cast<double>(n_) * row_mean.squaredNorm() + nn * grand * grand) / nn;
    if (!(var_x > 0.0) || !(var_y_ > 0.0)) return {0.0, true};
    const double r2 = std::max(dcov2, 0.0) / std::sqrt(var_x * var_y_);
    return {std::min(std::sqrt(r2), 1.0), false};
  }

 private:
  Index n_;
  Matrix centered_y_;
  double var_y_ = 0.0;
};

class BoundPearson final : public BoundStatistic {
 public:
  explicit BoundPearson(const Matrix& y) : y_(as_vector(y, "pearson")) {}

  StatValue evaluate(const Matrix& x) const override {
    require_rows(x, y_.size());
    try {
      return {std::abs(pearson(as_vector(x, "pearson"), y_)), false};
    } catch (const DegenerateInputError&) {
      return {0.0, true};
    }
  }

 private:
  Vector y_;
};

double kernel_mean(const Matrix& a, const Matrix& b, double inv_two_h2) {
  double total = 0.0;
  const Index d = a.cols();
  for (Index i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i).data();
    double row = 0.0;
    for (Index j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j).data();
      double s = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double diff = ai[k] - bj[k];
        s += diff * diff;
      }
      row += std::exp(-s * inv_two_h2);
    }
    total += row;
  }
  return total / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

class BoundMmd final : public BoundStatistic {
 public:
  BoundMmd(const Matrix& y, std::uint64_t seed) : y_(y) {
    if (y.rows() < 4) throw DegenerateInputError("mmd_dependence requires n >= 4");
    Rng rng = make_rng(derive_seed(seed, {0x6d6d64}));
    decoupled_y_ = select_rows(y, random_permutation(static_cast<std::size_t>(y.rows()), rng));
  }

  StatValue evaluate(const Matrix& x) const override {
    require_rows(x, y_.rows());
    const Matrix paired = hconcat(x, y_);
    const Matrix decoupled = hconcat(x, decoupled_y_);
    const double h = median_pairwise_distance(paired);
    if (!(h > 0.0)) return {0.0, true};
    return {two_sample_mmd(paired, decoupled, h), false};
  }

 private:
  Matrix y_;
  Matrix decoupled_y_;
};

// Dense ranks 0..levels-1 (ties share a rank).
std::vector<std::size_t> dense_ranks(const Vector& v, std::size_t& levels) {
  const auto n = static_cast<std::size_t>(v.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v(static_cast<Index>(a)) < v(static_cast<Index>(b));
  });
  std::vector<std::size_t> rank(n);
  levels = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && v(static_cast<Index>(order[k])) != v(static_cast<Index>(order[k - 1]))) ++levels;
    rank[order[k]] = levels;
  }
  levels = n == 0 ? 0 : levels + 1;
  return rank;
}

class BoundKs final : public BoundStatistic {
 public:
  explicit BoundKs(const Matrix& y) {
    const Vector v = as_vector(y, "ks_independence");
    if (v.size() < 2) throw DegenerateInputError("ks_independence requires n >= 2");
    y_rank_ = dense_ranks(v, y_levels_);
  }

  StatValue evaluate(const Matrix& x) const override {
    const Vector v = as_vector(x, "ks_independence");
    require_rows(x, static_cast<Index>(y_rank_.size()));
    std::size_t x_levels = 0;
    const auto x_rank = dense_ranks(v, x_levels);
    // A constant margin makes the joint CDF the product exactly.
    if (x_levels < 2 || y_levels_ < 2) return {0.0, true};
    const std::size_t n = y_rank_.size();
    const std::size_t cols = y_levels_;
    // cumulative[a * cols + b] = #{i : rank_x <= a, rank_y <= b}
    std::vector<double> cumulative(x_levels * cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) cumulative[x_rank[i] * cols + y_rank_[i]] += 1.0;
    for (std::size_t a = 0; a < x_levels; ++a) {
      for (std::size_t b = 1; b < cols; ++b) cumulative[a * cols + b] += cumulative[a * cols + b - 1];
    }
    for (std::size_t a = 1; a < x_levels; ++a) {
      for (std::size_t b = 0; b < cols; ++b) cumulative[a * cols + b] += cumulative[(a - 1) * cols + b];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double best = 0.0;
    for (std::size_t a = 0; a < x_levels; ++a) {
      const double fx = cumulative[a * cols + cols - 1] * inv_n;
      for (std::size_t b = 0; b < cols; ++b) {
        const double fy = cumulative[(x_levels - 1) * cols + b] * inv_n;
        best = std::max(best, std::abs(cumulative[a * cols + b] * inv_n - fx * fy));
      }
    }
    return {best, false};
  }

 private:
  std::vector<std::size_t> y_rank_;
  std::size_t y_levels_ = 0;
};

// Orthonormal basis of the centred column space, or an empty matrix if rank 0.
Matrix centered_basis(Matrix features) {
  features.rowwise() -= features.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(features, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  // Rounding residue of a constant column is ~1e-16 * sqrt(n); treat it as rank 0.
  if (!(top > 1e-12 * std::sqrt(static_cast<double>(features.rows())))) return Matrix(features.rows(), 0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-10 * top) ++rank;
  return svd.matrixU().leftCols(rank);
}

Matrix sine_features(const Matrix& copula, const Matrix& weights) {
  if (weights.rows() != copula.cols() + 1) throw ShapeError("rdc: projection weights do not match input dimension");
  Matrix augmented(copula.rows(), copula.cols() + 1);
  augmented.leftCols(copula.cols()) = copula;
  augmented.col(copula.cols()).setOnes();
  Matrix f = augmented * weights;
  return f.array().sin();
}

double largest_canonical_correlation(const Matrix& basis_x, const Matrix& basis_y) {
  const Eigen::MatrixXd cross = basis_x.transpose() * basis_y;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

class BoundRdc final : public BoundStatistic {
 public:
  BoundRdc(const Matrix& y, const RdcOptions& options, std::uint64_t seed) : options_(options), seed_(seed) {
    if (options.features < 1 || y.rows() <= options.features) {
      throw DegenerateInputError("rdc requires n > k >= 1");
    }
    y_basis_ = centered_basis(sine_features(copula_transform(y), rdc_projection_weights(y.cols(), options, seed, true)));
    n_ = y.rows();
  }

  StatValue evaluate(const Matrix& x) const override {
    require_rows(x, n_);
    const Matrix x_basis =
        centered_basis(sine_features(copula_transform(x), rdc_projection_weights(x.cols(), options_, seed_, false)));
    if (x_basis.cols() == 0 || y_basis_.cols() == 0) return {0.0, true};
    return {largest_canonical_correlation(x_basis, y_basis_), false};
  }

 private:
  RdcOptions options_;
  std::uint64_t seed_;
  Index n_ = 0;
  Matrix y_basis_;
};

}  // namespace

std::unique_ptr<BoundStatistic> bind_statistic(StatKind kind, const Matrix& y, const StatOptions& options,
                                               std::uint64_t seed) {
  if (y.rows() < 2) throw DegenerateInputError("statistics require n >= 2");
  switch (kind) {
    case StatKind::distance_correlation: return std::make_unique<BoundDcor>(y);
    case StatKind::pearson: return std::make_unique<BoundPearson>(y);
    case StatKind::mmd_rbf: return std::make_unique<BoundMmd>(y, seed);
    case StatKind::ks_independence: return std::make_unique<BoundKs>(y);
    case StatKind::rdc: return std::make_unique<BoundRdc>(y, options.rdc, seed);
  }
  throw ConfigError("unknown statistic");
}

StatValue compute_statistic(StatKind kind, const Matrix& x, const Matrix& y, const StatOptions& options,
                            std::uint64_t seed) {
  return bind_statistic(kind, y, options, seed)->evaluate(x);
}

StatValue distance_correlation(const Matrix& x, const Matrix& y) {
  return compute_statistic(StatKind::distance_correlation, x, y, {}, 0);
}

double pearson(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw ShapeError("pearson: length mismatch");
  if (x.size() < 2) throw DegenerateInputError("pearson requires n >= 2");
  const Vector dx = x.array() - x.mean();
  const Vector dy = y.array() - y.mean();
  const double sxx = dx.squaredNorm();
  const double syy = dy.squaredNorm();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateInputError("pearson: constant input");
  return std::clamp(dx.dot(dy) / std::sqrt(sxx * syy), -1.0, 1.0);
}

double two_sample_mmd(const Matrix& a, const Matrix& b, double bandwidth) {
  if (a.cols() != b.cols()) throw ShapeError("two_sample_mmd: dimension mismatch");
  if (!(bandwidth > 0.0)) throw ConfigError("two_sample_mmd: bandwidth must be positive");
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  const double value = kernel_mean(a, a, inv) + kernel_mean(b, b, inv) - 2.0 * kernel_mean(a, b, inv);
  return std::max(value, 0.0);
}

double median_pairwise_distance(const Matrix& points) {
  const Index n = points.rows();
  if (n < 2) return 0.0;
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) d.push_back(row_distance(points, i, j));
  }
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  const double upper = d[mid];
  if (d.size() % 2 == 1) return upper;
  const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

StatValue mmd_dependence(const Matrix& x, const Matrix& y, std::uint64_t seed) {
  return compute_statistic(StatKind::mmd_rbf, x, y, {}, seed);
}

StatValue ks_independence(const Vector& x, const Vector& y) {
  return compute_statistic(StatKind::ks_independence, Matrix(x), Matrix(y), {}, 0);
}

StatValue rdc(const Matrix& x, const Matrix& y, const RdcOptions& options, std::uint64_t seed) {
  StatOptions opts;
  opts.rdc = options;
  return compute_statistic(StatKind::rdc, x, y, opts, seed);
}

StatValue rdc_with_weights(const Matrix& x, const Matrix& y, const Matrix& x_weights, const Matrix& y_weights) {
  if (x.rows() != y.rows()) throw ShapeError("rdc: row counts differ");
  if (x.rows() <= std::max(x_weights.cols(), y_weights.cols())) throw DegenerateInputError("rdc requires n > k >= 1");
  const Matrix bx = centered_basis(sine_features(copula_transform(x), x_weights));
  const Matrix by = centered_basis(sine_features(copula_transform(y), y_weights));
  if (bx.cols() == 0 || by.cols() == 0) return {0.0, true};
  return {largest_canonical_correlation(bx, by), false};
}

Matrix rdc_projection_weights(Index d, const RdcOptions& options, std::uint64_t seed, bool y_block) {
  Rng rng = make_rng(derive_seed(seed, {0x726463, y_block ? 2u : 1u}));
  Matrix w(d + 1, options.features);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = options.scale * standard_normal(rng);
  return w;
}

Matrix copula_transform(const Matrix& m) {
  const Index n = m.rows();
  Matrix out(n, m.cols());
  std::vector<double> sorted(static_cast<std::size_t>(n));
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = m(i, c);
    std::sort(sorted.begin(), sorted.end());
    for (Index i = 0; i < n; ++i) {
      const auto count = std::upper_bound(sorted.begin(), sorted.end(), m(i, c)) - sorted.begin();
      out(i, c) = static_cast<double>(count) / static_cast<double>(n);
    }
  }
  return out;
}

}  // namespace cigen
