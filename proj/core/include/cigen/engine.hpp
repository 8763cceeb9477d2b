#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cigen/dataset.hpp"
#include "cigen/gan.hpp"
#include "cigen/sampler.hpp"
#include "cigen/stats.hpp"

namespace cigen {

enum class PValueMode { raw, add_one };

std::string_view to_string(PValueMode mode);
PValueMode parse_p_value_mode(std::string_view name);

struct TestConfig {
  StatKind statistic = StatKind::distance_correlation;
  StatOptions stat_options;
  std::size_t m_null_samples = 500;
  double alpha = 0.05;
  GanConfig gan;
  PValueMode p_value_mode = PValueMode::add_one;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  // Fraction of rows reserved for scoring only; 0 trains and scores on all rows.
  double evaluation_fraction = 0.0;
  // Number of null draws copied into TestResult::retained_draws.
  std::size_t retain_draws = 0;
};

void validate(const TestConfig& config);

struct TestResult {
  std::string method;
  double p_value = 1.0;
  double observed_stat = 0.0;
  std::vector<double> null_stats;
  bool reject = false;
  std::optional<double> bound_diagnostic;  // final generator loss (GCIT only)
  std::size_t degenerate_draws = 0;
  bool observed_degenerate = false;
  TestConfig config;
  std::vector<std::string> warnings;
  std::vector<Matrix> retained_draws;
};

// (sum_m 1{null_m >= observed}) / M, or (1 + count) / (1 + M) in add_one mode.
double empirical_p_value(double observed, std::span<const double> nulls, PValueMode mode);

// Scores the observed X and M draws from `sampler` with the configured
// statistic. Shared by every method so p-values are computed one way.
TestResult run_randomization_test(const Dataset& data, const ConditionalSampler& sampler, const TestConfig& config,
                                  std::string method);

// Builds a null sampler from (x, z) only. The default trains the GAN.
using SamplerFactory =
    std::function<std::unique_ptr<ConditionalSampler>(const Matrix& x, const Matrix& z, const GanConfig& config)>;

// GCIT: train the sampler on (X, Z), draw M null sets at the observed Z and
// compare rho(X~, Y) with rho(X, Y). Deterministic in config.seed.
TestResult gcit_test(const Dataset& data, const TestConfig& config, const SamplerFactory& factory = {});

// Permutation of rows where each row takes X from one of its k nearest
// neighbours in Z (ties broken at random). Constant Z gives a uniform permutation.
std::vector<std::size_t> neighbor_permutation(const Matrix& z, std::size_t k, std::uint64_t seed);

struct CalibrationOptions {
  std::size_t replicates = 20;
  std::size_t neighbors = 10;
};

struct LambdaRow {
  double lambda = 0.0;
  std::size_t rejections = 0;
  std::size_t replicates = 0;
  double type1 = 0.0;
  double standard_error = 0.0;
  bool within_tolerance = false;
};

struct LambdaCalibration {
  double chosen = 0.0;
  double threshold = 0.0;  // alpha + 2 sqrt(alpha (1 - alpha) / R)
  bool any_within_tolerance = false;
  std::vector<LambdaRow> rows;
};

// Picks the largest lambda whose type I error on neighbour-permuted
// surrogate data stays within the threshold (smallest estimate if none does).
LambdaCalibration calibrate_lambda(const Dataset& data, std::span<const double> lambda_grid, const TestConfig& config,
                                   const CalibrationOptions& options = {}, const SamplerFactory& factory = {});

}  // namespace cigen
