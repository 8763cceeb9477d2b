#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "cigen/infonet.hpp"
#include "cigen/numerics.hpp"
#include "cigen/sampler.hpp"

namespace cigen {

// Conditional energy-based GAN that learns q(X | Z).
//
// The discriminator D(x, z) in (0, 1) is trained to be low on real pairs and
// high on generated ones:
//   L_D = mean D(x, z) + mean (1 - D(G(v, z), z))
// and the generator G(v, z), v ~ U[0,1]^d (fed to the network centred and
// scaled to unit variance), descends
//   L_G = mean D(G(v, z), z) - mean D(x, z)   (+ lambda * DV(x, G(v, z)))
// where the optional term is the Donsker-Varadhan MI estimate from an
// information network refit before every generator step.

// Gradient used for the updates. `printed` differentiates L_D and L_G as
// written; `logistic` takes the same steps in logit space (D descends
// softplus(l_real) + softplus(-l_fake), G descends softplus(l_fake)), which
// keeps gradients alive when the sigmoid saturates. Reported losses are always
// L_D and L_G.
enum class GanObjective { printed, logistic };

std::string_view to_string(GanObjective objective);
GanObjective parse_gan_objective(std::string_view name);

struct GanConfig {
  Index noise_dim = 0;                      // 0 -> max(d_x, 5)
  std::vector<Index> generator_hidden;      // empty -> two layers of max(32, 2 d_z)
  std::vector<Index> discriminator_hidden;  // empty -> two layers of max(32, 2 d_z)
  Activation generator_activation = Activation::relu;
  Activation discriminator_activation = Activation::relu;
  std::size_t iterations = 2000;
  std::size_t batch_size = 64;
  std::size_t disc_steps_per_gen_step = 1;
  double generator_learning_rate = 5e-4;
  double discriminator_learning_rate = 2e-3;
  double lambda = 0.0;
  GanObjective objective = GanObjective::logistic;
  // Exponential moving average of generator weights used for sampling (0 disables).
  double generator_ema = 0.995;
  // Learning rates decay linearly to this fraction of their start value.
  double final_learning_rate_fraction = 0.1;
  InfoNetConfig info;
  // Rows withheld from training for the final-loss diagnostic. With 0 the
  // diagnostic uses every training row with fixed noise.
  double holdout_fraction = 0.0;
  // Stop when the diagnostic discriminator loss moves less than the tolerance
  // between checks spaced `early_stop_window` iterations apart (a window or
  // tolerance of 0 disables).
  std::size_t early_stop_window = 50;
  double early_stop_tolerance = 0.0;
  std::uint64_t seed = 0;
};

void validate(const GanConfig& config);

double discriminator_loss(const Mlp& discriminator, const Matrix& real_x, const Matrix& fake_x, const Matrix& z);
double generator_adversarial_loss(const Mlp& discriminator, const Matrix& fake_x, const Matrix& real_x,
                                  const Matrix& z);

struct EpochLosses {
  double discriminator = 0.0;
  double generator = 0.0;
  double information = 0.0;  // mean DV estimate seen by the generator (0 when lambda = 0)
};

// Trained generator with its diagnostics. Networks operate on standardised
// x and z; the sampler maps to and from data units.
class NullSampler final : public ConditionalSampler {
 public:
  Index x_dim() const override { return x_mean_.size(); }
  Index z_dim() const override { return z_mean_.size(); }
  Index noise_dim() const { return noise_dim_; }

  Matrix sample(const Matrix& z, std::uint64_t seed) const override;
  std::optional<double> bound_diagnostic() const override { return final_generator_loss_; }

  // Noise rows are drawn in row order from make_rng(seed).
  Matrix draw_noise(Index rows, std::uint64_t seed) const;
  // G(v, z) in data units.
  Matrix generate(const Matrix& z, const Matrix& noise) const;

  // L_G / L_D on (x, z) in data units with noise from draw_noise(rows, seed).
  double evaluate_generator_loss(const Matrix& x, const Matrix& z, std::uint64_t noise_seed) const;
  double evaluate_discriminator_loss(const Matrix& x, const Matrix& z, std::uint64_t noise_seed) const;

  double final_generator_loss() const { return final_generator_loss_; }
  double final_discriminator_loss() const { return final_discriminator_loss_; }
  const std::vector<EpochLosses>& training_curve() const { return curve_; }
  std::size_t iterations_run() const { return iterations_run_; }
  bool early_stopped() const { return early_stopped_; }
  const std::vector<std::size_t>& holdout_rows() const { return holdout_rows_; }
  std::uint64_t diagnostic_seed() const { return diagnostic_seed_; }

  const Mlp& generator() const { return generator_; }
  Mlp& generator() { return generator_; }
  const Mlp& discriminator() const { return discriminator_; }

 private:
  friend NullSampler train_null_sampler(const Matrix& x, const Matrix& z, const GanConfig& config);
  friend NullSampler make_null_sampler(Mlp generator, Mlp discriminator, Index noise_dim, Index x_dim);

  Matrix standardize_x(const Matrix& x) const;
  Matrix standardize_z(const Matrix& z) const;
  Matrix unstandardize_x(const Matrix& x) const;
  Matrix generate_standardized(const Matrix& z_std, const Matrix& noise) const;

  Mlp generator_;
  Mlp discriminator_;
  Index noise_dim_ = 0;
  RowVector x_mean_, x_scale_, z_mean_, z_scale_;
  double final_generator_loss_ = 0.0;
  double final_discriminator_loss_ = 0.0;
  std::vector<EpochLosses> curve_;
  std::size_t iterations_run_ = 0;
  bool early_stopped_ = false;
  std::vector<std::size_t> holdout_rows_;
  std::uint64_t diagnostic_seed_ = 0;
};

// Trains on (x, z) only; Y never reaches the sampler. Deterministic in config.seed.
// Throws TrainingDivergedError on a non-finite loss.
NullSampler train_null_sampler(const Matrix& x, const Matrix& z, const GanConfig& config);

// Untrained sampler around given networks with identity standardisation
// (generator input = noise_dim + d_z). Used for tests and tooling.
NullSampler make_null_sampler(Mlp generator, Mlp discriminator, Index noise_dim, Index x_dim);

// Resolved architecture for a problem size.
Index resolved_noise_dim(const GanConfig& config, Index x_dim);
std::vector<Index> resolved_hidden(const std::vector<Index>& requested, Index z_dim);

}  // namespace cigen
