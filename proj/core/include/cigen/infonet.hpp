#pragma once

#include <cstdint>
#include <vector>

#include "cigen/numerics.hpp"

namespace cigen {

// Donsker-Varadhan mutual information estimation between X and X~ with a
// statistics network T(x, x~) -> R.

inline constexpr double kDvClamp = 50.0;

struct InfoNetConfig {
  Index hidden = 32;
  std::size_t inner_steps = 50;
  double learning_rate = 1e-3;
};

struct DvValue {
  double value = 0.0;
  bool saturated = false;  // some T(marginal) hit the exp clamp
};

// mean T(paired) - log mean exp T(marginal), with max-subtraction.
// Rows are (x, x~) concatenations. Requires at least 2 rows in each.
DvValue dv_objective(const Mlp& statistics_net, const Matrix& paired, const Matrix& marginal);

// Rows (x_i, x~_perm(i)): a draw from the product of the empirical marginals.
Matrix marginal_pairs(const Matrix& x, const Matrix& x_tilde, const std::vector<std::size_t>& perm);

class InfoNet {
 public:
  InfoNet() = default;
  InfoNet(Index x_dim, const InfoNetConfig& config, std::uint64_t seed);

  const Mlp& network() const { return net_; }
  Mlp& network() { return net_; }
  const InfoNetConfig& config() const { return config_; }

  // One Adam ascent step on the DV objective; returns the objective before the step.
  double ascent_step(const Matrix& x, const Matrix& x_tilde, const std::vector<std::size_t>& perm);

  // Objective at fixed T and its gradient with respect to x_tilde.
  DvValue objective_and_input_gradient(const Matrix& x, const Matrix& x_tilde, const std::vector<std::size_t>& perm,
                                       Matrix& grad_x_tilde) const;

  DvValue evaluate(const Matrix& x, const Matrix& x_tilde, const std::vector<std::size_t>& perm) const;

  // Objective and parameter gradient (for finite-difference checks).
  DvValue objective_and_parameter_gradient(const Matrix& paired, const Matrix& marginal, Parameters& grads) const;

 private:
  Mlp net_;
  AdamState adam_;
  InfoNetConfig config_;
};

struct MiEstimate {
  double value = 0.0;
  bool saturated = false;
  std::size_t steps = 0;
};

// Full-batch DV maximisation for `steps` Adam steps (fresh permutation each
// step), then the objective under a fresh permutation.
MiEstimate fit_and_estimate(const Matrix& x, const Matrix& x_tilde, std::size_t steps, std::uint64_t seed,
                            const InfoNetConfig& config = {});

}  // namespace cigen
