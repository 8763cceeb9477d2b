#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "cigen/dataset.hpp"
#include "cigen/sampler.hpp"

namespace cigen {

// Post non-linear noise model:
//   H0: X = f(A_f Z + e_f),  Y = g(A_g Z + e_g)
//   H1: X ~ N(0, sigma^2) (Laplace in setting 2),  Y = h(A_h Z + alpha X + e_h)
// with univariate X and Y. Rows of A are Uniform[0,1] draws normalised to
// sum to one; alpha = alpha_strength * Uniform[0,1].

enum class Setting { gaussian, laplace, arbitrary };
enum class Hypothesis { h0, h1 };
enum class Transform { identity, cube, tanh, negexp };

std::string_view to_string(Setting s);
std::string_view to_string(Hypothesis h);
std::string_view to_string(Transform t);
Setting parse_setting(std::string_view name);
Hypothesis parse_hypothesis(std::string_view name);

inline constexpr double kDefaultNoiseVariance = 0.025;

struct MiBand {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct SynthSpec {
  Setting setting = Setting::gaussian;
  Hypothesis hypothesis = Hypothesis::h0;
  std::size_t n = 500;
  std::size_t dz = 5;
  double sigma = 1.0;
  double alpha_strength = 1.0;
  double noise_std = std::sqrt(kDefaultNoiseVariance);
  std::optional<MiBand> mi_band;
  std::size_t max_redraws = 50;
  std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

// Everything needed to resample X | Z exactly as the generator did.
struct SyntheticModel {
  SynthSpec spec;
  RowVector a_f, a_g, a_h;
  double alpha = 0.0;
  Transform f = Transform::identity;
  Transform g = Transform::identity;
  Transform h = Transform::identity;
  double f_scale = 1.0;  // pre-activation divisor when f is negexp
};

struct SynthDraw {
  Dataset data;
  SyntheticModel model;
};

SynthDraw generate_with_model(const SynthSpec& spec);
Dataset generate(const SynthSpec& spec);

// The true q(X | Z) of a synthetic model (marginal of X under H1).
std::unique_ptr<ConditionalSampler> true_conditional_sampler(const SyntheticModel& model);

struct MiProxy {
  double value = 0.0;
  bool saturated = false;  // |rho| so close to 1 that rho^2 was clipped
};

// -1/2 log(1 - rho^2) with rho the sample Pearson correlation (nats).
MiProxy gaussian_mi_proxy(const Vector& x, const Vector& y);

struct ControlledDraw {
  SynthDraw draw;
  std::size_t redraws = 0;
  double proxy = 0.0;
};

// Rejection loop: attempt 0 uses spec.seed, attempt a > 0 derive_seed(spec.seed, {a}).
// Throws BandUnreachableError after 1 + max_redraws attempts.
ControlledDraw generate_mi_controlled(const SynthSpec& spec);

// Bisection on alpha_strength in [0, 1] so the median proxy over pilot draws
// sits at the band midpoint; returns 1 if the midpoint is out of reach.
double tune_strength(const SynthSpec& spec, const MiBand& band, std::size_t pilots = 21);

}  // namespace cigen
