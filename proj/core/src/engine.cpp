#include "cigen/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "cigen/error.hpp"
#include "cigen/rng.hpp"

namespace cigen {

std::string_view to_string(PValueMode mode) { return mode == PValueMode::raw ? "raw" : "add_one"; }

PValueMode parse_p_value_mode(std::string_view name) {
  if (name == "raw") return PValueMode::raw;
  if (name == "add_one" || name == "add-one") return PValueMode::add_one;
  throw ConfigError("unknown p-value mode '" + std::string(name) + "' (expected raw|add_one)");
}

void validate(const TestConfig& c) {
  if (c.m_null_samples < 1) throw ConfigError("test: M must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("test: alpha must be in (0, 1)");
  if (!(c.evaluation_fraction >= 0.0 && c.evaluation_fraction < 1.0)) {
    throw ConfigError("test: evaluation_fraction must be in [0, 1)");
  }
  validate(c.gan);
}

double empirical_p_value(double observed, std::span<const double> nulls, PValueMode mode) {
  if (nulls.empty()) throw ConfigError("empirical_p_value: no null statistics");
  const auto count = static_cast<double>(std::count_if(nulls.begin(), nulls.end(), [&](double v) { return v >= observed; }));
  const auto m = static_cast<double>(nulls.size());
  return mode == PValueMode::raw ? count / m : (1.0 + count) / (1.0 + m);
}

TestResult run_randomization_test(const Dataset& data, const ConditionalSampler& sampler, const TestConfig& config,
                                  std::string method) {
  validate(config);
  data.validate();
  if (sampler.x_dim() != data.dx() || sampler.z_dim() != data.dz()) {
    throw ShapeError("sampler dimensions do not match the dataset");
  }
  TestResult result;
  result.method = std::move(method);
  result.config = config;

  const auto statistic = bind_statistic(config.statistic, data.y, config.stat_options, derive_seed(config.seed, {2}));
  const StatValue observed = statistic->evaluate(data.x);
  result.observed_stat = observed.value;
  result.observed_degenerate = observed.degenerate;

  const std::size_t m = config.m_null_samples;
  const std::uint64_t null_seed = derive_seed(config.seed, {3});
  std::vector<StatValue> values(m);
  const std::size_t retain = std::min(config.retain_draws, m);
  result.retained_draws.resize(retain);

  auto work = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t i = worker; i < m; i += stride) {
      Matrix draw = sampler.sample(data.z, derive_seed(null_seed, {i}));
      values[i] = statistic->evaluate(draw);
      if (i < retain) result.retained_draws[i] = std::move(draw);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(config.workers, 1, m);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  result.null_stats.reserve(m);
  for (const auto& v : values) {
    result.null_stats.push_back(v.value);
    if (v.degenerate) ++result.degenerate_draws;
  }
  result.p_value = empirical_p_value(result.observed_stat, result.null_stats, config.p_value_mode);
  result.reject = result.p_value <= config.alpha;
  result.bound_diagnostic = sampler.bound_diagnostic();
  return result;
}

TestResult gcit_test(const Dataset& data, const TestConfig& config, const SamplerFactory& factory) {
  validate(config);
  data.validate();
  std::vector<std::string> warnings;
  const auto n = static_cast<std::size_t>(data.rows());
  if (n < 50) warnings.push_back("n = " + std::to_string(n) + " is below the recommended minimum of 50");

  Dataset train = data;
  Dataset eval = data;
  if (config.evaluation_fraction > 0.0) {
    Rng rng = make_rng(derive_seed(config.seed, {4}));
    const auto order = random_permutation(n, rng);
    const auto n_eval = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::round(config.evaluation_fraction * static_cast<double>(n))));
    if (n_eval >= n) throw ConfigError("test: evaluation split leaves no training rows");
    std::vector<std::size_t> eval_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_eval));
    std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_eval), order.end());
    std::sort(eval_rows.begin(), eval_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    train = {select_rows(data.x, train_rows), Matrix(), select_rows(data.z, train_rows), data.provenance};
    eval = {select_rows(data.x, eval_rows), select_rows(data.y, eval_rows), select_rows(data.z, eval_rows),
            data.provenance};
  }

  GanConfig gan = config.gan;
  gan.seed = derive_seed(config.seed, {1});
  const auto n_train = static_cast<std::size_t>(train.x.rows());
  if (n_train < 2 * gan.batch_size) {
    gan.batch_size = std::max<std::size_t>(1, n_train / 2);
    warnings.push_back("batch_size reduced to " + std::to_string(gan.batch_size) + " for n = " + std::to_string(n_train));
  }

  // Only X and Z reach the sampler.
  std::unique_ptr<ConditionalSampler> sampler =
      factory ? factory(train.x, train.z, gan) : std::make_unique<NullSampler>(train_null_sampler(train.x, train.z, gan));

  TestResult result = run_randomization_test(eval, *sampler, config, "gcit");
  result.warnings.insert(result.warnings.begin(), warnings.begin(), warnings.end());
  return result;
}

std::vector<std::size_t> neighbor_permutation(const Matrix& z, std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(z.rows());
  Rng rng = make_rng(seed);
  if (k < 1) throw ConfigError("neighbor_permutation: k must be >= 1");
  bool constant = true;
  for (Index i = 1; i < z.rows() && constant; ++i) constant = (z.row(i).array() == z.row(0).array()).all();
  if (constant) return random_permutation(n, rng);

  const std::size_t kk = std::min(k, n);
  std::vector<std::vector<std::size_t>> neighbours(n);
  std::vector<std::pair<std::pair<double, double>, std::size_t>> scratch(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (z.row(static_cast<Index>(i)) - z.row(static_cast<Index>(j))).squaredNorm();
      scratch[j] = {{d, uniform01(rng)}, j};
    }
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(kk), scratch.end());
    for (std::size_t q = 0; q < kk; ++q) neighbours[i].push_back(scratch[q].second);
  }

  std::vector<std::size_t> perm(n);
  std::vector<bool> used(n, false);
  std::vector<std::size_t> unused(n);
  std::iota(unused.begin(), unused.end(), std::size_t{0});
  for (std::size_t i : random_permutation(n, rng)) {
    std::vector<std::size_t> free;
    for (std::size_t j : neighbours[i]) {
      if (!used[j]) free.push_back(j);
    }
    std::size_t pick;
    if (!free.empty()) {
      pick = free[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(free.size()))];
    } else {
      pick = unused[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(unused.size()))];
    }
    used[pick] = true;
    unused.erase(std::find(unused.begin(), unused.end(), pick));
    perm[i] = pick;
  }
  return perm;
}

LambdaCalibration calibrate_lambda(const Dataset& data, std::span<const double> lambda_grid, const TestConfig& config,
                                   const CalibrationOptions& options, const SamplerFactory& factory) {
  if (lambda_grid.empty()) throw ConfigError("calibrate_lambda: empty lambda grid");
  for (double l : lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("calibrate_lambda: lambda values must be finite and >= 0");
  }
  if (options.replicates < 1) throw ConfigError("calibrate_lambda: replicates must be >= 1");
  validate(config);
  data.validate();

  LambdaCalibration out;
  const double r = static_cast<double>(options.replicates);
  out.threshold = config.alpha + 2.0 * std::sqrt(config.alpha * (1.0 - config.alpha) / r);
  for (double l : lambda_grid) out.rows.push_back({l, 0, options.replicates, 0.0, 0.0, false});

  for (std::size_t rep = 0; rep < options.replicates; ++rep) {
    const auto perm = neighbor_permutation(data.z, options.neighbors, derive_seed(config.seed, {0xca1, rep}));
    Dataset surrogate{select_rows(data.x, perm), data.y, data.z, data.provenance + " (neighbour-permuted)"};
    for (auto& row : out.rows) {
      TestConfig c = config;
      c.gan.lambda = row.lambda;
      c.seed = derive_seed(config.seed, {0xca1, rep, 1});
      if (gcit_test(surrogate, c, factory).reject) ++row.rejections;
    }
  }

  std::optional<std::size_t> best_within;
  std::size_t lowest = 0;
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    auto& row = out.rows[i];
    row.type1 = static_cast<double>(row.rejections) / r;
    row.standard_error = std::sqrt(row.type1 * (1.0 - row.type1) / r);
    row.within_tolerance = row.type1 <= out.threshold;
    if (row.within_tolerance && (!best_within || row.lambda > out.rows[*best_within].lambda)) best_within = i;
    const auto& low = out.rows[lowest];
    if (row.type1 < low.type1 || (row.type1 == low.type1 && row.lambda < low.lambda)) lowest = i;
  }
  out.any_within_tolerance = best_within.has_value();
  out.chosen = out.rows[best_within.value_or(lowest)].lambda;
  return out;
}

}  // namespace cigen
