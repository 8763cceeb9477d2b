#include "cigen/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "cigen/crt.hpp"
#include "cigen/error.hpp"
#include "cigen/rng.hpp"

namespace cigen {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::gcit: return "gcit";
    case Method::crt: return "crt";
    case Method::oracle: return "oracle";
  }
  return "gcit";
}

Method parse_method(std::string_view name) {
  if (name == "gcit") return Method::gcit;
  if (name == "crt") return Method::crt;
  if (name == "oracle") return Method::oracle;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected gcit|crt|oracle)");
}

void validate(const BenchPlan& p) {
  if (p.methods.empty() || p.settings.empty() || p.hypotheses.empty() || p.dz.empty() || p.lambdas.empty()) {
    throw ConfigError("bench: every grid must be non-empty");
  }
  if (p.replications < 1) throw ConfigError("bench: replications must be >= 1");
  if (p.n < 1) throw ConfigError("bench: n must be >= 1");
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw ConfigError("bench: alpha must be in (0, 1)");
  if (p.m_null_samples < 1) throw ConfigError("bench: M must be >= 1");
  if (p.tv_bins < 2) throw ConfigError("bench: tv_bins must be >= 2");
  for (double l : p.lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("bench: lambda values must be finite and >= 0");
  }
  for (std::size_t d : p.dz) {
    if (d < 1) throw ConfigError("bench: dz values must be >= 1");
  }
  if (p.mi_band && !(p.mi_band->lo <= p.mi_band->hi)) throw ConfigError("bench: empty MI band");
  validate(p.gan);
}

namespace {

std::uint64_t cell_key(const BenchPlan& plan, Setting setting, Hypothesis hypothesis, std::size_t dz) {
  return derive_seed(plan.seed, {static_cast<std::uint64_t>(setting), static_cast<std::uint64_t>(hypothesis), dz,
                                 plan.n});
}

struct Outcome {
  bool failed = false;
  bool reject = false;
  double runtime = 0.0;
  std::optional<double> bound;
  double tv = 0.0;
};

struct Task {
  Method method;
  double lambda;
};

}  // namespace

ReplicationSeeds replication_seeds(const BenchPlan& plan, Setting setting, Hypothesis hypothesis, std::size_t dz,
                                   std::size_t replication) {
  const std::uint64_t key = cell_key(plan, setting, hypothesis, dz);
  return {derive_seed(key, {1, replication}), derive_seed(key, {2, replication})};
}

SynthSpec cell_spec(const BenchPlan& plan, Setting setting, Hypothesis hypothesis, std::size_t dz) {
  SynthSpec spec;
  spec.setting = setting;
  spec.hypothesis = hypothesis;
  spec.n = plan.n;
  spec.dz = dz;
  spec.max_redraws = plan.max_redraws;
  if (hypothesis == Hypothesis::h1 && plan.mi_band) {
    spec.mi_band = plan.mi_band;
    SynthSpec pilot = spec;
    pilot.seed = derive_seed(cell_key(plan, setting, hypothesis, dz), {3});
    spec.alpha_strength = tune_strength(pilot, *plan.mi_band);
  }
  return spec;
}

SynthDraw replication_draw(const SynthSpec& cell, std::uint64_t data_seed) {
  SynthSpec spec = cell;
  spec.seed = data_seed;
  if (spec.mi_band) return generate_mi_controlled(spec).draw;
  return generate_with_model(spec);
}

TestConfig plan_test_config(const BenchPlan& plan, double lambda, std::uint64_t test_seed) {
  TestConfig config;
  config.statistic = plan.statistic;
  config.m_null_samples = plan.m_null_samples;
  config.alpha = plan.alpha;
  config.gan = plan.gan;
  config.gan.lambda = lambda;
  config.seed = test_seed;
  config.workers = 1;
  config.retain_draws = 1;
  return config;
}

TvBound tv_lower_bound(std::span<const double> generated, std::span<const double> real, std::size_t bins) {
  if (generated.empty() || real.empty()) throw DegenerateInputError("tv_lower_bound: empty sample");
  if (bins < 2) throw ConfigError("tv_lower_bound: bins must be >= 2");
  double lo = generated[0];
  double hi = generated[0];
  for (auto s : {generated, real}) {
    for (double v : s) {
      if (!std::isfinite(v)) throw DegenerateInputError("tv_lower_bound: non-finite value");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::vector<double> p(bins, 0.0), q(bins, 0.0);
  auto fill = [&](std::span<const double> s, std::vector<double>& h) {
    const double w = 1.0 / static_cast<double>(s.size());
    for (double v : s) {
      std::size_t b = 0;
      if (hi > lo) {
        b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        b = std::min(b, bins - 1);
      }
      h[b] += w;
    }
  };
  fill(generated, p);
  fill(real, q);
  double sum = 0.0;
  for (std::size_t b = 0; b < bins; ++b) sum += std::abs(p[b] - q[b]);
  TvBound out;
  out.tv = std::clamp(0.5 * sum, 0.0, 1.0);
  out.error_sum_bound = 1.0 - out.tv;
  return out;
}

BenchTable run_plan(const BenchPlan& plan) {
  validate(plan);

  struct DataCell {
    Setting setting;
    Hypothesis hypothesis;
    std::size_t dz;
    SynthSpec spec;
    std::optional<std::string> error;
  };
  std::vector<DataCell> cells;
  for (Setting s : plan.settings) {
    for (Hypothesis h : plan.hypotheses) {
      for (std::size_t d : plan.dz) cells.push_back({s, h, d, {}, std::nullopt});
    }
  }
  std::vector<Task> tasks;
  for (Method m : plan.methods) {
    if (m == Method::gcit) {
      for (double l : plan.lambdas) tasks.push_back({m, l});
    } else {
      tasks.push_back({m, 0.0});
    }
  }

  const std::size_t reps = plan.replications;
  const std::size_t jobs = cells.size() * reps;
  std::vector<std::vector<Outcome>> outcomes(jobs, std::vector<Outcome>(tasks.size()));

  // Strength tuning is per data cell and deterministic, so it runs up front.
  for (auto& c : cells) {
    try {
      c.spec = cell_spec(plan, c.setting, c.hypothesis, c.dz);
    } catch (const std::exception& e) {
      c.error = e.what();
    }
  }

  auto run_job = [&](std::size_t job) {
    const auto& cell = cells[job / reps];
    const std::size_t rep = job % reps;
    auto& out = outcomes[job];
    if (cell.error) {
      for (auto& o : out) o.failed = true;
      return;
    }
    const auto seeds = replication_seeds(plan, cell.setting, cell.hypothesis, cell.dz, rep);
    SynthDraw drawn;
    try {
      drawn = replication_draw(cell.spec, seeds.data);
    } catch (const std::exception&) {
      for (auto& o : out) o.failed = true;
      return;
    }
    const Dataset& data = drawn.data;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const auto start = std::chrono::steady_clock::now();
      try {
        const TestConfig config = plan_test_config(plan, tasks[t].lambda, seeds.test);
        TestResult r;
        switch (tasks[t].method) {
          case Method::gcit: r = gcit_test(data, config); break;
          case Method::crt: r = crt_test(data, config); break;
          case Method::oracle:
            r = run_randomization_test(data, *true_conditional_sampler(drawn.model), config, "oracle");
            break;
        }
        out[t].reject = r.reject;
        out[t].bound = r.bound_diagnostic;
        if (!r.retained_draws.empty()) {
          const Matrix& draw = r.retained_draws.front();
          out[t].tv = tv_lower_bound(std::span<const double>(draw.data(), static_cast<std::size_t>(draw.size())),
                                     std::span<const double>(data.x.data(), static_cast<std::size_t>(data.x.size())),
                                     plan.tv_bins)
                          .tv;
        }
      } catch (const std::exception&) {
        out[t].failed = true;
      }
      out[t].runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(plan.workers, 1, std::max<std::size_t>(jobs, 1));
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs; ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs; j = next++) run_job(j);
      });
    }
  }

  BenchTable table;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      BenchRow row;
      row.method = tasks[t].method;
      row.setting = cells[c].setting;
      row.hypothesis = cells[c].hypothesis;
      row.dz = cells[c].dz;
      row.n = plan.n;
      row.lambda = tasks[t].lambda;
      row.replications = reps;
      row.strength = cells[c].spec.alpha_strength;
      double runtime = 0.0, bound = 0.0, tv = 0.0;
      std::size_t bound_count = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        const Outcome& o = outcomes[c * reps + r][t];
        if (o.failed) {
          ++row.failures;
          continue;
        }
        row.rejections += o.reject ? 1 : 0;
        runtime += o.runtime;
        tv += o.tv;
        if (o.bound) {
          bound += *o.bound;
          ++bound_count;
        }
      }
      const std::size_t ok = reps - row.failures;
      if (cells[c].error) {
        row.error = *cells[c].error;
      } else if (20 * row.failures >= reps) {
        row.error = std::to_string(row.failures) + " of " + std::to_string(reps) + " replications failed";
      }
      if (ok > 0) {
        const double k = static_cast<double>(ok);
        row.rate = static_cast<double>(row.rejections) / k;
        row.standard_error = std::sqrt(row.rate * (1.0 - row.rate) / k);
        row.mean_runtime = runtime / k;
        row.mean_tv = tv / k;
      }
      if (bound_count > 0) row.mean_bound_diagnostic = bound / static_cast<double>(bound_count);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

BenchTable lambda_sweep(const BenchPlan& plan, std::span<const double> lambdas) {
  BenchPlan p = plan;
  p.methods = {Method::gcit};
  p.hypotheses = {Hypothesis::h0, Hypothesis::h1};
  p.lambdas.assign(lambdas.begin(), lambdas.end());
  return run_plan(p);
}

}  // namespace cigen
