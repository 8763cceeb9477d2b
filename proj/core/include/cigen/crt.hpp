#pragma once

#include <optional>

#include "cigen/engine.hpp"

namespace cigen {

// Conditional randomization test with a linear-Gaussian model for X | Z
// fitted by ridge regression.

inline constexpr double kResidualStdFloor = 1e-8;

struct GaussianConditional {
  Vector beta;
  double intercept = 0.0;
  double residual_std = kResidualStdFloor;
  double ridge_penalty = 0.0;
  double effective_df = 0.0;  // trace of the hat matrix, intercept included
};

// Ridge least squares of x on z (penalty defaults to 1e-3 * n, intercept
// unpenalised); residual std = sqrt(RSS / (n - df)), floored.
GaussianConditional fit_gaussian_conditional(const Vector& x, const Matrix& z,
                                             std::optional<double> penalty = std::nullopt);

class GaussianConditionalSampler final : public ConditionalSampler {
 public:
  explicit GaussianConditionalSampler(GaussianConditional model) : model_(std::move(model)) {}
  Index x_dim() const override { return 1; }
  Index z_dim() const override { return model_.beta.size(); }
  Matrix sample(const Matrix& z, std::uint64_t seed) const override;
  const GaussianConditional& model() const { return model_; }

 private:
  GaussianConditional model_;
};

// Throws UnsupportedBaselineError when d_x > 1.
TestResult crt_test(const Dataset& data, const TestConfig& config);

}  // namespace cigen
