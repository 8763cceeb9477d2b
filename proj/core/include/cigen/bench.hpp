#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cigen/engine.hpp"
#include "cigen/synth.hpp"

namespace cigen {

// Synthetic type I / power experiments over a grid of settings, hypotheses,
// conditioning dimensions and (for GCIT) lambda values.

enum class Method { gcit, crt, oracle };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct BenchPlan {
  std::vector<Method> methods{Method::gcit, Method::crt};
  std::vector<Setting> settings{Setting::gaussian};
  std::vector<Hypothesis> hypotheses{Hypothesis::h0, Hypothesis::h1};
  std::vector<std::size_t> dz{5, 25, 50, 100};
  std::size_t n = 500;
  std::size_t replications = 100;
  double alpha = 0.05;
  std::vector<double> lambdas{0.0};  // gcit only
  StatKind statistic = StatKind::distance_correlation;
  // H1 cells use MI-controlled generation with strength tuned to this band.
  std::optional<MiBand> mi_band = MiBand{0.05, 0.15};
  std::size_t max_redraws = 50;
  std::size_t m_null_samples = 500;
  GanConfig gan;
  std::size_t tv_bins = 20;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

void validate(const BenchPlan& plan);

struct BenchRow {
  Method method = Method::gcit;
  Setting setting = Setting::gaussian;
  Hypothesis hypothesis = Hypothesis::h0;
  std::size_t dz = 0;
  std::size_t n = 0;
  double lambda = 0.0;
  std::size_t replications = 0;
  std::size_t rejections = 0;
  std::size_t failures = 0;
  double rate = 0.0;
  double standard_error = 0.0;  // sqrt(rate (1 - rate) / R)
  double mean_runtime = 0.0;    // seconds per replication test
  double strength = 1.0;        // alpha_strength used for the data cell
  std::optional<double> mean_bound_diagnostic;
  double mean_tv = 0.0;  // TV between the first null draw and the observed X
  std::optional<std::string> error;  // set when >= 5% of replications failed
};

struct BenchTable {
  std::vector<BenchRow> rows;
};

// Seeds for one replication of one data cell. The data seed feeds synth and
// the test seed feeds TestConfig::seed for every method on that dataset.
struct ReplicationSeeds {
  std::uint64_t data = 0;
  std::uint64_t test = 0;
};

ReplicationSeeds replication_seeds(const BenchPlan& plan, Setting setting, Hypothesis hypothesis, std::size_t dz,
                                   std::size_t replication);

// The synth spec of a data cell with its tuned strength (seed not yet set).
SynthSpec cell_spec(const BenchPlan& plan, Setting setting, Hypothesis hypothesis, std::size_t dz);

// Data for one replication: MI-controlled when the cell has a band.
SynthDraw replication_draw(const SynthSpec& cell, std::uint64_t data_seed);

// The test configuration every method of the plan uses.
TestConfig plan_test_config(const BenchPlan& plan, double lambda, std::uint64_t test_seed);

// Rows are ordered by setting, hypothesis, dz, method, lambda. Deterministic
// in plan.seed for any worker count.
BenchTable run_plan(const BenchPlan& plan);

// GCIT-only run over H0 and H1 for each lambda.
BenchTable lambda_sweep(const BenchPlan& plan, std::span<const double> lambdas);

struct TvBound {
  double tv = 0.0;
  double error_sum_bound = 1.0;  // 1 - tv
};

// Half the L1 distance between equal-width histograms over the pooled range.
TvBound tv_lower_bound(std::span<const double> generated, std::span<const double> real, std::size_t bins);

}  // namespace cigen
