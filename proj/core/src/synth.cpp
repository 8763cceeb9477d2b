#include "cigen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "cigen/error.hpp"
#include "cigen/rng.hpp"
#include "cigen/stats.hpp"

namespace cigen {

std::string_view to_string(Setting s) {
  switch (s) {
    case Setting::gaussian: return "gaussian";
    case Setting::laplace: return "laplace";
    case Setting::arbitrary: return "arbitrary";
  }
  return "gaussian";
}

std::string_view to_string(Hypothesis h) { return h == Hypothesis::h0 ? "H0" : "H1"; }

std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::identity: return "identity";
    case Transform::cube: return "cube";
    case Transform::tanh: return "tanh";
    case Transform::negexp: return "negexp";
  }
  return "identity";
}

Setting parse_setting(std::string_view name) {
  if (name == "gaussian" || name == "1") return Setting::gaussian;
  if (name == "laplace" || name == "2") return Setting::laplace;
  if (name == "arbitrary" || name == "3") return Setting::arbitrary;
  throw ConfigError("unknown setting '" + std::string(name) + "' (expected gaussian|laplace|arbitrary)");
}

Hypothesis parse_hypothesis(std::string_view name) {
  if (name == "H0" || name == "h0") return Hypothesis::h0;
  if (name == "H1" || name == "h1") return Hypothesis::h1;
  throw ConfigError("unknown hypothesis '" + std::string(name) + "' (expected H0|H1)");
}

void validate(const SynthSpec& spec) {
  if (spec.n < 1) throw ConfigError("synth: n must be >= 1");
  if (spec.dz < 1) throw ConfigError("synth: dz must be >= 1");
  if (!(spec.alpha_strength >= 0.0 && spec.alpha_strength <= 1.0)) throw ConfigError("synth: alpha_strength must be in [0, 1]");
  if (!(spec.sigma > 0.0)) throw ConfigError("synth: sigma must be positive");
  if (!(spec.noise_std >= 0.0)) throw ConfigError("synth: noise_std must be >= 0");
  if (spec.mi_band && !(spec.mi_band->lo <= spec.mi_band->hi)) throw ConfigError("synth: empty MI band");
}

namespace {

// All random components of one draw; Y under H1 is assembled from these for any strength.
struct RawDraw {
  SyntheticModel model;
  Matrix z;
  Vector pre_f, pre_g, pre_h_base;  // A Z + e terms
  Vector x_marginal;                // H1 X
  double alpha_unit = 0.0;          // Uniform[0,1] before strength
};

double draw_scalar(Setting setting, double sigma, Rng& rng) {
  if (setting == Setting::laplace) return laplace(rng, sigma / std::sqrt(2.0));
  return sigma * standard_normal(rng);
}

RowVector normalized_weights(std::size_t dz, Rng& rng) {
  RowVector a(static_cast<Index>(dz));
  for (Index j = 0; j < a.size(); ++j) a(j) = uniform01(rng);
  const double total = a.sum();
  if (total > 0.0) a /= total;
  else a.setConstant(1.0 / static_cast<double>(dz));
  return a;
}

Transform draw_transform(Rng& rng) {
  const auto k = std::min<int>(2, static_cast<int>(uniform01(rng) * 3.0));
  return k == 0 ? Transform::cube : (k == 1 ? Transform::tanh : Transform::negexp);
}

double sample_std(const Vector& v) {
  const double var = (v.array() - v.mean()).square().mean();
  return var > 0.0 ? std::sqrt(var) : 1.0;
}

Vector apply_transform(Transform t, const Vector& v, double negexp_scale) {
  switch (t) {
    case Transform::identity: return v;
    case Transform::cube: return v.array().cube();
    case Transform::tanh: return v.array().tanh();
    case Transform::negexp: return (-v.array() / negexp_scale).exp();
  }
  return v;
}

RawDraw draw_components(const SynthSpec& spec) {
  validate(spec);
  Rng rng = make_rng(spec.seed);
  RawDraw r;
  r.model.spec = spec;
  r.model.a_f = normalized_weights(spec.dz, rng);
  r.model.a_g = normalized_weights(spec.dz, rng);
  r.model.a_h = normalized_weights(spec.dz, rng);
  r.alpha_unit = uniform01(rng);
  const Transform f = draw_transform(rng);
  const Transform g = draw_transform(rng);
  const Transform h = draw_transform(rng);
  if (spec.setting == Setting::arbitrary) {
    r.model.f = f;
    r.model.g = g;
    r.model.h = h;
  }

  const auto n = static_cast<Index>(spec.n);
  r.z.resize(n, static_cast<Index>(spec.dz));
  for (Index i = 0; i < r.z.size(); ++i) r.z.data()[i] = draw_scalar(spec.setting, spec.sigma, rng);
  auto noise = [&] {
    Vector e(n);
    for (Index i = 0; i < n; ++i) e(i) = spec.noise_std * standard_normal(rng);
    return e;
  };
  const Vector e_f = noise();
  const Vector e_g = noise();
  const Vector e_h = noise();
  r.x_marginal.resize(n);
  for (Index i = 0; i < n; ++i) r.x_marginal(i) = draw_scalar(spec.setting, spec.sigma, rng);

  r.pre_f = r.z * r.model.a_f.transpose() + e_f;
  r.pre_g = r.z * r.model.a_g.transpose() + e_g;
  r.pre_h_base = r.z * r.model.a_h.transpose() + e_h;
  return r;
}

SynthDraw assemble(const RawDraw& r, double strength) {
  SynthDraw out;
  out.model = r.model;
  out.model.spec.alpha_strength = strength;
  out.model.alpha = strength * r.alpha_unit;
  const SynthSpec& spec = out.model.spec;

  Vector x, y;
  if (spec.hypothesis == Hypothesis::h0) {
    out.model.f_scale = out.model.f == Transform::negexp ? sample_std(r.pre_f) : 1.0;
    x = apply_transform(out.model.f, r.pre_f, out.model.f_scale);
    y = apply_transform(out.model.g, r.pre_g, sample_std(r.pre_g));
  } else {
    x = r.x_marginal;
    const Vector pre = r.pre_h_base + out.model.alpha * x;
    y = apply_transform(out.model.h, pre, sample_std(pre));
  }
  out.data.x = x;
  out.data.y = y;
  out.data.z = r.z;
  std::ostringstream prov;
  prov.precision(17);
  prov << "synth setting=" << to_string(spec.setting) << " hypothesis=" << to_string(spec.hypothesis)
       << " n=" << spec.n << " dz=" << spec.dz << " sigma=" << spec.sigma << " alpha_strength=" << strength
       << " noise_var=" << spec.noise_std * spec.noise_std << " seed=" << spec.seed;
  out.data.provenance = prov.str();
  return out;
}

class SyntheticConditional final : public ConditionalSampler {
 public:
  explicit SyntheticConditional(SyntheticModel model) : model_(std::move(model)) {}
  Index x_dim() const override { return 1; }
  Index z_dim() const override { return model_.a_f.size(); }

  Matrix sample(const Matrix& z, std::uint64_t seed) const override {
    if (z.cols() != z_dim()) throw ShapeError("synthetic sampler: z has the wrong number of columns");
    Rng rng = make_rng(seed);
    const auto& spec = model_.spec;
    Vector out(z.rows());
    if (spec.hypothesis == Hypothesis::h1) {
      for (Index i = 0; i < out.size(); ++i) out(i) = draw_scalar(spec.setting, spec.sigma, rng);
      return out;
    }
    Vector pre = z * model_.a_f.transpose();
    for (Index i = 0; i < pre.size(); ++i) pre(i) += spec.noise_std * standard_normal(rng);
    return apply_transform(model_.f, pre, model_.f_scale);
  }

 private:
  SyntheticModel model_;
};

}  // namespace

SynthDraw generate_with_model(const SynthSpec& spec) {
  return assemble(draw_components(spec), spec.alpha_strength);
}

Dataset generate(const SynthSpec& spec) { return generate_with_model(spec).data; }

std::unique_ptr<ConditionalSampler> true_conditional_sampler(const SyntheticModel& model) {
  return std::make_unique<SyntheticConditional>(model);
}

MiProxy gaussian_mi_proxy(const Vector& x, const Vector& y) {
  const double rho = pearson(x, y);
  MiProxy out;
  double r2 = rho * rho;
  constexpr double kMaxR2 = 1.0 - 1e-12;
  if (r2 > kMaxR2) {
    r2 = kMaxR2;
    out.saturated = true;
  }
  out.value = -0.5 * std::log1p(-r2);
  return out;
}

ControlledDraw generate_mi_controlled(const SynthSpec& spec) {
  validate(spec);
  const MiBand band = spec.mi_band.value_or(MiBand{});
  std::vector<double> history;
  for (std::size_t attempt = 0; attempt <= spec.max_redraws; ++attempt) {
    SynthSpec s = spec;
    if (attempt > 0) s.seed = derive_seed(spec.seed, {attempt});
    ControlledDraw out;
    out.draw = generate_with_model(s);
    out.redraws = attempt;
    const Vector x = out.draw.data.x.col(0);
    const Vector y = out.draw.data.y.col(0);
    double proxy = 0.0;
    try {
      proxy = gaussian_mi_proxy(x, y).value;
    } catch (const DegenerateInputError&) {
      proxy = 0.0;
    }
    out.proxy = proxy;
    if (band.contains(proxy)) return out;
    history.push_back(proxy);
  }
  std::ostringstream msg;
  msg << "MI band [" << band.lo << ", " << band.hi << "] not reached after " << history.size()
      << " draws; last proxies:";
  for (std::size_t i = history.size() > 5 ? history.size() - 5 : 0; i < history.size(); ++i) msg << ' ' << history[i];
  throw BandUnreachableError(msg.str());
}

double tune_strength(const SynthSpec& spec, const MiBand& band, std::size_t pilots) {
  validate(spec);
  if (pilots < 1) throw ConfigError("tune_strength: pilots must be >= 1");
  const double target = std::isfinite(band.hi) ? 0.5 * (band.lo + band.hi) : band.lo;
  std::vector<RawDraw> raw;
  raw.reserve(pilots);
  for (std::size_t p = 0; p < pilots; ++p) {
    SynthSpec s = spec;
    s.seed = derive_seed(spec.seed, {0x74756e65, p});
    raw.push_back(draw_components(s));
  }
  auto median_proxy = [&](double strength) {
    std::vector<double> v;
    v.reserve(raw.size());
    for (const auto& r : raw) {
      const SynthDraw d = assemble(r, strength);
      try {
        v.push_back(gaussian_mi_proxy(d.data.x.col(0), d.data.y.col(0)).value);
      } catch (const DegenerateInputError&) {
        v.push_back(0.0);
      }
    }
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  if (median_proxy(1.0) <= target) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (median_proxy(mid) < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace cigen
