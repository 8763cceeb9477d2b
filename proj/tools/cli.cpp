#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cigen/bench.hpp"
#include "cigen/crt.hpp"
#include "cigen/engine.hpp"
#include "cigen/error.hpp"
#include "cigen/io.hpp"
#include "cigen/synth.hpp"

namespace cigen::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t default_workers() {
  const char* env = std::getenv("CIGEN_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  std::size_t v = 0;
  const std::string_view s(env);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
    throw UsageError("CIGEN_WORKERS must be a positive integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto first = item.find_first_not_of(' ');
    const auto last = item.find_last_not_of(' ');
    const std::string_view s = first == std::string::npos ? std::string_view{}
                                                          : std::string_view(item).substr(first, last - first + 1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw UsageError(flag + ": not a number: '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::ios_base::failure("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw std::ios_base::failure("error writing '" + path + "'");
}

struct TestArgs {
  std::string data;
  std::string method = "gcit";
  std::string statistic = "dcor";
  double alpha = 0.05;
  std::size_t m = 500;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::string json;
  std::optional<std::size_t> workers;
  std::string p_value_mode = "add_one";
  std::size_t iterations = GanConfig{}.iterations;
  std::size_t batch_size = GanConfig{}.batch_size;
  double evaluation_fraction = 0.0;
  Index rdc_features = RdcOptions{}.features;
  double rdc_scale = RdcOptions{}.scale;
};

struct SynthArgs {
  std::string setting = "gaussian";
  std::string hypothesis = "H0";
  std::size_t n = 500;
  std::size_t dz = 5;
  std::uint64_t seed = 0;
  double sigma = 1.0;
  double strength = 1.0;
  double noise_var = kDefaultNoiseVariance;
  std::string mi_band;
  bool auto_strength = false;
  std::size_t max_redraws = 50;
  std::string out;
};

struct CalibrateArgs {
  std::string data;
  std::string grid = "0,1,10,50";
  std::size_t replicates = 20;
  std::size_t neighbors = 10;
  std::string statistic = "dcor";
  double alpha = 0.05;
  std::size_t m = 500;
  std::uint64_t seed = 0;
  std::size_t iterations = GanConfig{}.iterations;
  std::optional<std::size_t> workers;
  std::string json;
};

struct BenchArgs {
  std::string plan;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string json;
  bool timing = false;
};

TestConfig make_test_config(const TestArgs& a) {
  TestConfig c;
  c.statistic = parse_stat_kind(a.statistic);
  c.stat_options.rdc.features = a.rdc_features;
  c.stat_options.rdc.scale = a.rdc_scale;
  c.alpha = a.alpha;
  c.m_null_samples = a.m;
  c.gan.lambda = a.lambda;
  c.gan.iterations = a.iterations;
  c.gan.batch_size = a.batch_size;
  c.seed = a.seed;
  c.workers = a.workers.value_or(default_workers());
  c.p_value_mode = parse_p_value_mode(a.p_value_mode);
  c.evaluation_fraction = a.evaluation_fraction;
  return c;
}

int run_test(const TestArgs& a, std::ostream& out, std::ostream& err) {
  if (a.method != "gcit" && a.method != "crt") throw UsageError("--method must be gcit or crt");
  const TestConfig config = make_test_config(a);
  const Dataset data = load_csv(a.data);
  if (a.method == "crt" && data.dx() != 1) {
    throw UsageError("--method crt requires univariate x, but the data has d_x = " + std::to_string(data.dx()));
  }
  const TestResult result = a.method == "crt" ? crt_test(data, config) : gcit_test(data, config);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  const std::string json = result_json(result);
  out << json << '\n';
  if (!a.json.empty()) write_text(a.json, json + "\n");
  return result.reject ? kReject : kNoReject;
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  SynthSpec spec;
  spec.setting = parse_setting(a.setting);
  spec.hypothesis = parse_hypothesis(a.hypothesis);
  spec.n = a.n;
  spec.dz = a.dz;
  spec.seed = a.seed;
  spec.sigma = a.sigma;
  spec.alpha_strength = a.strength;
  if (!(a.noise_var >= 0.0)) throw UsageError("--noise-var must be >= 0");
  spec.noise_std = std::sqrt(a.noise_var);
  spec.max_redraws = a.max_redraws;
  if (!a.mi_band.empty()) {
    const auto v = parse_number_list(a.mi_band, "--mi-band");
    if (v.size() != 2) throw UsageError("--mi-band expects lo,hi");
    spec.mi_band = MiBand{v[0], v[1]};
  }
  if (a.auto_strength) {
    if (!spec.mi_band) throw UsageError("--auto-strength requires --mi-band");
    spec.alpha_strength = tune_strength(spec, *spec.mi_band);
  }

  Dataset data;
  std::size_t redraws = 0;
  if (spec.mi_band) {
    auto drawn = generate_mi_controlled(spec);
    data = std::move(drawn.draw.data);
    redraws = drawn.redraws;
  } else {
    data = generate(spec);
  }
  if (a.out.empty() || a.out == "-") {
    write_csv(out, data);
  } else {
    save_csv(a.out, data);
    out << "wrote " << data.rows() << " rows to " << a.out << " (alpha_strength=" << format_double(spec.alpha_strength)
        << ", redraws=" << redraws << ")\n";
  }
  return 0;
}

int run_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const auto grid = parse_number_list(a.grid, "--lambda-grid");
  TestConfig config;
  config.statistic = parse_stat_kind(a.statistic);
  config.alpha = a.alpha;
  config.m_null_samples = a.m;
  config.seed = a.seed;
  config.gan.iterations = a.iterations;
  config.workers = a.workers.value_or(default_workers());
  CalibrationOptions options;
  options.replicates = a.replicates;
  options.neighbors = a.neighbors;
  const Dataset data = load_csv(a.data);
  const auto result = calibrate_lambda(data, grid, config, options);
  const std::string json = calibration_json(result);
  out << json << '\n';
  if (!a.json.empty()) write_text(a.json, json + "\n");
  return 0;
}

int run_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  BenchPlan plan = load_plan(a.plan);
  if (a.workers) plan.workers = *a.workers;
  else if (std::getenv("CIGEN_WORKERS")) plan.workers = default_workers();
  if (a.seed) plan.seed = *a.seed;
  const BenchTable table = run_plan(plan);
  const std::string csv = bench_csv(table, a.timing);
  if (a.out.empty() || a.out == "-") out << csv;
  else write_text(a.out, csv);
  if (!a.json.empty()) write_text(a.json, bench_json(plan, table, a.timing) + "\n");
  bool failed = false;
  for (const auto& r : table.rows) {
    if (r.error) {
      err << "error: " << to_string(r.method) << ' ' << to_string(r.setting) << ' ' << to_string(r.hypothesis)
          << " dz=" << r.dz << ": " << *r.error << '\n';
      failed = true;
    }
  }
  return failed ? kInternal : 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional independence testing with a learned null sampler", "cigen"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  TestArgs ta;
  auto* test = app.add_subcommand("test", "Run one conditional independence test on a CSV dataset");
  test->add_option("--data", ta.data, "CSV with x.., y.., z1.. columns")->required();
  test->add_option("--method", ta.method, "gcit or crt")->check(CLI::IsMember({"gcit", "crt"}));
  test->add_option("--statistic", ta.statistic, "dcor, pearson, mmd, ks or rdc");
  test->add_option("--alpha", ta.alpha, "Significance level");
  test->add_option("--m", ta.m, "Number of null draws");
  test->add_option("--lambda", ta.lambda, "Weight of the information term (gcit)");
  test->add_option("--seed", ta.seed, "Random seed");
  test->add_option("--json", ta.json, "Also write the result JSON to this file");
  test->add_option("--workers", ta.workers, "Threads for scoring null draws (default $CIGEN_WORKERS or 1)");
  test->add_option("--p-value-mode", ta.p_value_mode, "add_one or raw");
  test->add_option("--iterations", ta.iterations, "GAN training iterations");
  test->add_option("--batch-size", ta.batch_size, "GAN minibatch size");
  test->add_option("--evaluation-fraction", ta.evaluation_fraction,
                   "Fraction of rows scored but not used to train the sampler");
  test->add_option("--rdc-features", ta.rdc_features, "Random features per block for rdc");
  test->add_option("--rdc-scale", ta.rdc_scale, "Projection scale for rdc");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--setting", sa.setting, "gaussian, laplace or arbitrary");
  synth->add_option("--hypothesis", sa.hypothesis, "H0 or H1");
  synth->add_option("--n", sa.n, "Rows");
  synth->add_option("--dz", sa.dz, "Dimension of Z");
  synth->add_option("--seed", sa.seed, "Random seed");
  synth->add_option("--sigma", sa.sigma, "Scale of Z and X draws");
  synth->add_option("--strength", sa.strength, "Multiplier on the Uniform[0,1] alpha draw");
  synth->add_option("--noise-var", sa.noise_var, "Variance of the additive noise");
  synth->add_option("--mi-band", sa.mi_band, "Accept draws whose MI proxy lies in lo,hi");
  synth->add_flag("--auto-strength", sa.auto_strength, "Tune --strength to the middle of --mi-band");
  synth->add_option("--max-redraws", sa.max_redraws, "Redraw budget for --mi-band");
  synth->add_option("--out", sa.out, "Output CSV (default stdout)");

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate", "Choose lambda on neighbour-permuted surrogate data");
  calibrate->add_option("--data", ca.data, "CSV dataset")->required();
  calibrate->add_option("--lambda-grid", ca.grid, "Comma-separated lambda values");
  calibrate->add_option("--replicates", ca.replicates, "Surrogate datasets");
  calibrate->add_option("--neighbors", ca.neighbors, "Nearest neighbours in Z for the permutation");
  calibrate->add_option("--statistic", ca.statistic, "dcor, pearson, mmd, ks or rdc");
  calibrate->add_option("--alpha", ca.alpha, "Significance level");
  calibrate->add_option("--m", ca.m, "Number of null draws");
  calibrate->add_option("--seed", ca.seed, "Random seed");
  calibrate->add_option("--iterations", ca.iterations, "GAN training iterations");
  calibrate->add_option("--workers", ca.workers, "Threads for scoring null draws");
  calibrate->add_option("--json", ca.json, "Also write the result JSON to this file");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run a benchmark plan");
  bench->add_option("--plan", ba.plan, "Plan file of key = value lines")->required();
  bench->add_option("--workers", ba.workers, "Worker threads (default $CIGEN_WORKERS or the plan)");
  bench->add_option("--seed", ba.seed, "Override the plan seed");
  bench->add_option("--out", ba.out, "Output CSV (default stdout)");
  bench->add_option("--json", ba.json, "Also write a JSON summary");
  bench->add_flag("--timing", ba.timing, "Report mean runtime instead of NA");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << "run 'cigen --help' for usage\n";
    return kUsage;
  }

  try {
    if (*test) return run_test(ta, out, err);
    if (*synth) return run_synth(sa, out);
    if (*calibrate) return run_calibrate(ca, out);
    return run_bench(ba, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const UnsupportedBaselineError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const SchemaError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DegenerateInputError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const BandUnreachableError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::ios_base::failure& e) {
    err << "io error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace cigen::cli
