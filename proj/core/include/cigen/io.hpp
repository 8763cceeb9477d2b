#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "cigen/bench.hpp"
#include "cigen/dataset.hpp"
#include "cigen/engine.hpp"

namespace cigen {

// Dataset CSV: a header naming x (or x1..), y (or y1..) and z1.. columns in
// any order, then numeric rows. Errors carry 1-based line and column.
Dataset parse_csv(std::istream& in, const std::string& source = "<stream>");
Dataset load_csv(const std::string& path);

// Columns x1.. (x when d_x = 1), y.., z1..; shortest round-trip numbers.
void write_csv(std::ostream& out, const Dataset& data);
void save_csv(const std::string& path, const Dataset& data);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

inline constexpr int kSchemaVersion = 1;

std::string result_json(const TestResult& result, int indent = 2);
std::string calibration_json(const LambdaCalibration& calibration, int indent = 2);

// Plan file: `key = value` lines, `#` comments, comma-separated lists.
// Keys: methods, settings, hypotheses, dz, n, replications, alpha, lambdas,
// statistic, mi_band (lo,hi or none), max_redraws, m, iterations,
// batch_size, tv_bins, seed, workers.
BenchPlan parse_plan(std::istream& in, const std::string& source = "<stream>");
BenchPlan load_plan(const std::string& path);

// Header method,setting,hypothesis,dz,n,lambda,rate,se,runtime_s. Runtime is
// written as NA unless `timing` is set so output is reproducible byte for byte.
std::string bench_csv(const BenchTable& table, bool timing = false);
std::string bench_json(const BenchPlan& plan, const BenchTable& table, bool timing = false, int indent = 2);

}  // namespace cigen
