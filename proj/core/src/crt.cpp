#include "cigen/crt.hpp"

#include <algorithm>
#include <cmath>

#include "cigen/error.hpp"
#include "cigen/rng.hpp"

namespace cigen {

GaussianConditional fit_gaussian_conditional(const Vector& x, const Matrix& z, std::optional<double> penalty) {
  if (x.size() != z.rows()) throw ShapeError("fit_gaussian_conditional: x and z row counts differ");
  if (x.size() < 2) throw DegenerateInputError("fit_gaussian_conditional requires n >= 2");
  const auto n = static_cast<double>(x.size());
  GaussianConditional out;
  out.ridge_penalty = penalty.value_or(1e-3 * n);
  if (!(out.ridge_penalty > 0.0)) throw ConfigError("fit_gaussian_conditional: ridge penalty must be positive");

  const RowVector z_mean = z.colwise().mean();
  const Eigen::MatrixXd zc = z.rowwise() - z_mean;
  const double x_mean = x.mean();
  const Vector xc = x.array() - x_mean;

  // Z'Z = V diag(e) V'; beta = V diag(1 / (e + penalty)) V' Z'x and df = sum e / (e + penalty).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(zc.transpose() * zc);
  const Vector e = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd& v = eig.eigenvectors();
  const Vector shrink = (e.array() + out.ridge_penalty).inverse();
  out.beta = v * (shrink.asDiagonal() * (v.transpose() * (zc.transpose() * xc)));
  out.effective_df = 1.0 + (e.array() * shrink.array()).sum();
  out.intercept = x_mean - z_mean.dot(out.beta);

  const Vector residual = xc - zc * out.beta;
  const double denom = n - out.effective_df > 0.0 ? n - out.effective_df : n;
  out.residual_std = std::max(std::sqrt(residual.squaredNorm() / denom), kResidualStdFloor);
  return out;
}

Matrix GaussianConditionalSampler::sample(const Matrix& z, std::uint64_t seed) const {
  if (z.cols() != z_dim()) throw ShapeError("CRT sampler: z has the wrong number of columns");
  Rng rng = make_rng(seed);
  Vector out = z * model_.beta;
  for (Index i = 0; i < out.size(); ++i) out(i) += model_.intercept + model_.residual_std * standard_normal(rng);
  return out;
}

TestResult crt_test(const Dataset& data, const TestConfig& config) {
  if (data.dx() != 1) throw UnsupportedBaselineError("CRT baseline requires univariate x (d_x = 1)");
  validate(config);
  data.validate();
  const GaussianConditionalSampler sampler(fit_gaussian_conditional(data.x.col(0), data.z));
  return run_randomization_test(data, sampler, config, "crt");
}

}  // namespace cigen
