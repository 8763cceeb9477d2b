#include "cigen/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "cigen/error.hpp"
#include "json.hpp"

namespace cigen {

namespace {

using Json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Splits on commas, keeping the 1-based column of each field.
std::vector<std::pair<std::string_view, std::size_t>> split_fields(std::string_view line) {
  std::vector<std::pair<std::string_view, std::size_t>> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto end = comma == std::string_view::npos ? line.size() : comma;
    out.emplace_back(trim(line.substr(start, end - start)), start + 1);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename T>
std::optional<T> to_unsigned(std::string_view s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct ColumnRole {
  char block = 0;  // 'x', 'y' or 'z'
  std::size_t index = 0;  // 0-based within block
};

std::optional<ColumnRole> classify(std::string_view name) {
  if (name.empty()) return std::nullopt;
  const char block = name.front();
  if (block != 'x' && block != 'y' && block != 'z') return std::nullopt;
  const auto rest = name.substr(1);
  if (rest.empty()) {
    if (block == 'z') return std::nullopt;
    return ColumnRole{block, 0};
  }
  if (rest.front() == '0') return std::nullopt;
  const auto idx = to_unsigned<std::size_t>(rest);
  if (!idx || *idx < 1) return std::nullopt;
  return ColumnRole{block, *idx - 1};
}

std::string where(const std::string& source, std::size_t line, std::size_t column) {
  std::string s = source + ":" + std::to_string(line);
  if (column > 0) s += ":" + std::to_string(column);
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

Dataset parse_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    have_header = !trim(line).empty();
  }
  if (!have_header) throw SchemaError(source + ": empty file, expected a header with x, y and z1.. columns", 0, 0);

  const auto header = split_fields(line);
  std::vector<ColumnRole> roles;
  std::map<char, std::vector<std::size_t>> seen;  // block -> indices
  std::map<char, bool> plain;                     // block used the unnumbered name
  for (const auto& [name, col] : header) {
    const auto role = classify(name);
    if (!role) {
      throw SchemaError(where(source, line_no, col) + ": unrecognised column '" + std::string(name) +
                            "' (expected x or x1.., y or y1.., z1..)",
                        line_no, col);
    }
    auto& indices = seen[role->block];
    const bool is_plain = name.size() == 1;
    if (std::find(indices.begin(), indices.end(), role->index) != indices.end() ||
        (!indices.empty() && plain[role->block] != is_plain)) {
      throw SchemaError(where(source, line_no, col) + ": duplicate column '" + std::string(name) + "'", line_no, col);
    }
    plain[role->block] = is_plain;
    indices.push_back(role->index);
    roles.push_back(*role);
  }
  for (char block : {'x', 'y', 'z'}) {
    auto& indices = seen[block];
    if (indices.empty()) {
      throw SchemaError(source + ": missing " + std::string(1, block) +
                            " column; the header needs x (or x1..), y (or y1..) and z1.. columns",
                        line_no, 0);
    }
    std::sort(indices.begin(), indices.end());
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] != k) {
        throw SchemaError(source + ": " + std::string(1, block) + " columns must be numbered 1.." +
                              std::to_string(indices.size()) + " without gaps",
                          line_no, 0);
      }
    }
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != roles.size()) {
      throw SchemaError(where(source, line_no, 0) + ": expected " + std::to_string(roles.size()) + " fields, found " +
                            std::to_string(fields.size()),
                        line_no, 0);
    }
    std::vector<double> values;
    values.reserve(fields.size());
    for (const auto& [text, col] : fields) {
      if (text.empty()) {
        throw SchemaError(where(source, line_no, col) + ": missing value", line_no, col);
      }
      const auto v = to_double(text);
      if (!v) {
        throw SchemaError(where(source, line_no, col) + ": not a number: '" + std::string(text) + "'", line_no, col);
      }
      if (!std::isfinite(*v)) {
        throw SchemaError(where(source, line_no, col) + ": non-finite value '" + std::string(text) + "'", line_no, col);
      }
      values.push_back(*v);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw SchemaError(source + ": no data rows", line_no, 0);

  const auto n = static_cast<Index>(rows.size());
  Dataset data;
  data.x.resize(n, static_cast<Index>(seen['x'].size()));
  data.y.resize(n, static_cast<Index>(seen['y'].size()));
  data.z.resize(n, static_cast<Index>(seen['z'].size()));
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < roles.size(); ++c) {
      const auto j = static_cast<Index>(roles[c].index);
      switch (roles[c].block) {
        case 'x': data.x(i, j) = r[c]; break;
        case 'y': data.y(i, j) = r[c]; break;
        default: data.z(i, j) = r[c]; break;
      }
    }
  }
  data.provenance = source;
  return data;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "' for reading");
  return parse_csv(in, path);
}

void write_csv(std::ostream& out, const Dataset& data) {
  data.validate();
  std::vector<std::string> names;
  auto block_names = [&](char block, Index d, bool allow_plain) {
    for (Index j = 0; j < d; ++j) {
      names.push_back(allow_plain && d == 1 ? std::string(1, block) : std::string(1, block) + std::to_string(j + 1));
    }
  };
  block_names('x', data.dx(), true);
  block_names('y', data.dy(), true);
  block_names('z', data.dz(), false);
  for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
  out << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    bool first = true;
    for (const Matrix* m : {&data.x, &data.y, &data.z}) {
      for (Index j = 0; j < m->cols(); ++j) {
        out << (first ? "" : ",") << format_double((*m)(i, j));
        first = false;
      }
    }
    out << '\n';
  }
}

void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open '" + path + "' for writing");
  write_csv(out, data);
  if (!out) throw std::ios_base::failure("error writing '" + path + "'");
}

std::string result_json(const TestResult& r, int indent) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = r.method;
  j["p_value"] = r.p_value;
  j["observed_stat"] = r.observed_stat;
  j["reject"] = r.reject;
  j["alpha"] = r.config.alpha;
  j["statistic"] = std::string(to_string(r.config.statistic));
  j["lambda"] = r.config.gan.lambda;
  j["m"] = r.config.m_null_samples;
  j["seed"] = r.config.seed;
  j["p_value_mode"] = std::string(to_string(r.config.p_value_mode));
  j["bound_diagnostic"] = r.bound_diagnostic ? Json(*r.bound_diagnostic) : Json(nullptr);
  j["degenerate_draws"] = r.degenerate_draws;
  j["observed_degenerate"] = r.observed_degenerate;
  j["warnings"] = r.warnings;
  j["null_stats"] = r.null_stats;
  return j.dump(indent);
}

std::string calibration_json(const LambdaCalibration& c, int indent) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["chosen_lambda"] = c.chosen;
  j["threshold"] = c.threshold;
  j["any_within_tolerance"] = c.any_within_tolerance;
  Json rows = Json::array();
  for (const auto& r : c.rows) {
    rows.push_back({{"lambda", r.lambda},
                    {"rejections", r.rejections},
                    {"replicates", r.replicates},
                    {"type1", r.type1},
                    {"se", r.standard_error},
                    {"within_tolerance", r.within_tolerance}});
  }
  j["rows"] = std::move(rows);
  return j.dump(indent);
}

namespace {

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view value, Parse parse) {
  std::vector<T> out;
  for (const auto& [item, col] : split_fields(value)) {
    (void)col;
    out.push_back(parse(item));
  }
  return out;
}

}  // namespace

BenchPlan parse_plan(std::istream& in, const std::string& source) {
  BenchPlan plan;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw SchemaError(where(source, line_no, 0) + ": expected key = value", line_no, 0);
    }
    const std::string key(trim(text.substr(0, eq)));
    const std::string_view value = trim(text.substr(eq + 1));
    const std::size_t value_col = static_cast<std::size_t>(value.data() - line.data()) + 1;
    auto bad = [&](const std::string& why) {
      return SchemaError(where(source, line_no, value_col) + ": " + key + ": " + why, line_no, value_col);
    };
    auto number = [&](std::string_view s) {
      const auto v = to_double(s);
      if (!v || !std::isfinite(*v)) throw bad("not a number: '" + std::string(s) + "'");
      return *v;
    };
    auto count = [&](std::string_view s) {
      const auto v = to_unsigned<std::size_t>(s);
      if (!v) throw bad("not a non-negative integer: '" + std::string(s) + "'");
      return *v;
    };
    try {
      if (key == "methods") {
        plan.methods = parse_list<Method>(value, [](std::string_view s) { return parse_method(s); });
      } else if (key == "settings") {
        plan.settings = parse_list<Setting>(value, [](std::string_view s) { return parse_setting(s); });
      } else if (key == "hypotheses") {
        plan.hypotheses = parse_list<Hypothesis>(value, [](std::string_view s) { return parse_hypothesis(s); });
      } else if (key == "dz") {
        plan.dz = parse_list<std::size_t>(value, count);
      } else if (key == "n") {
        plan.n = count(value);
      } else if (key == "replications") {
        plan.replications = count(value);
      } else if (key == "alpha") {
        plan.alpha = number(value);
      } else if (key == "lambdas") {
        plan.lambdas = parse_list<double>(value, number);
      } else if (key == "statistic") {
        plan.statistic = parse_stat_kind(value);
      } else if (key == "mi_band") {
        if (value == "none") {
          plan.mi_band.reset();
        } else {
          const auto v = parse_list<double>(value, [&](std::string_view s) {
            if (s == "inf") return std::numeric_limits<double>::infinity();
            return number(s);
          });
          if (v.size() != 2) throw bad("expected lo,hi or none");
          plan.mi_band = MiBand{v[0], v[1]};
        }
      } else if (key == "max_redraws") {
        plan.max_redraws = count(value);
      } else if (key == "m") {
        plan.m_null_samples = count(value);
      } else if (key == "iterations") {
        plan.gan.iterations = count(value);
      } else if (key == "batch_size") {
        plan.gan.batch_size = count(value);
      } else if (key == "tv_bins") {
        plan.tv_bins = count(value);
      } else if (key == "seed") {
        const auto v = to_unsigned<std::uint64_t>(value);
        if (!v) throw bad("not an unsigned 64-bit integer");
        plan.seed = *v;
      } else if (key == "workers") {
        plan.workers = count(value);
      } else {
        throw SchemaError(where(source, line_no, 1) + ": unknown key '" + key + "'", line_no, 1);
      }
    } catch (const ConfigError& e) {
      throw bad(e.what());
    }
  }
  validate(plan);
  return plan;
}

BenchPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "' for reading");
  return parse_plan(in, path);
}

std::string bench_csv(const BenchTable& table, bool timing) {
  std::ostringstream out;
  out << "method,setting,hypothesis,dz,n,lambda,rate,se,runtime_s\n";
  for (const auto& r : table.rows) {
    out << to_string(r.method) << ',' << to_string(r.setting) << ',' << to_string(r.hypothesis) << ',' << r.dz << ','
        << r.n << ',' << format_double(r.lambda) << ',';
    if (r.error) {
      out << "NA,NA,";
    } else {
      out << format_double(r.rate) << ',' << format_double(r.standard_error) << ',';
    }
    out << (timing && !r.error ? format_double(r.mean_runtime) : std::string("NA")) << '\n';
  }
  return out.str();
}

std::string bench_json(const BenchPlan& plan, const BenchTable& table, bool timing, int indent) {
  Json p;
  auto names = [](const auto& values) {
    Json a = Json::array();
    for (const auto& v : values) a.push_back(std::string(to_string(v)));
    return a;
  };
  p["methods"] = names(plan.methods);
  p["settings"] = names(plan.settings);
  p["hypotheses"] = names(plan.hypotheses);
  p["dz"] = plan.dz;
  p["n"] = plan.n;
  p["replications"] = plan.replications;
  p["alpha"] = plan.alpha;
  p["lambdas"] = plan.lambdas;
  p["statistic"] = std::string(to_string(plan.statistic));
  p["mi_band"] = plan.mi_band ? Json::array({plan.mi_band->lo, std::isfinite(plan.mi_band->hi)
                                                                   ? Json(plan.mi_band->hi)
                                                                   : Json("inf")})
                              : Json(nullptr);
  p["max_redraws"] = plan.max_redraws;
  p["m"] = plan.m_null_samples;
  p["iterations"] = plan.gan.iterations;
  p["batch_size"] = plan.gan.batch_size;
  p["tv_bins"] = plan.tv_bins;
  p["seed"] = plan.seed;

  Json rows = Json::array();
  for (const auto& r : table.rows) {
    Json row;
    row["method"] = std::string(to_string(r.method));
    row["setting"] = std::string(to_string(r.setting));
    row["hypothesis"] = std::string(to_string(r.hypothesis));
    row["dz"] = r.dz;
    row["n"] = r.n;
    row["lambda"] = r.lambda;
    row["replications"] = r.replications;
    row["rejections"] = r.rejections;
    row["failures"] = r.failures;
    row["rate"] = r.error ? Json(nullptr) : Json(r.rate);
    row["se"] = r.error ? Json(nullptr) : Json(r.standard_error);
    row["runtime_s"] = timing && !r.error ? Json(r.mean_runtime) : Json(nullptr);
    row["alpha_strength"] = r.strength;
    row["mean_bound_diagnostic"] = r.mean_bound_diagnostic ? Json(*r.mean_bound_diagnostic) : Json(nullptr);
    row["mean_tv"] = r.mean_tv;
    row["error"] = r.error ? Json(*r.error) : Json(nullptr);
    rows.push_back(std::move(row));
  }
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["plan"] = std::move(p);
  j["rows"] = std::move(rows);
  return j.dump(indent);
}

}  // namespace cigen
