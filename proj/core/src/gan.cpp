#include "cigen/gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cigen/error.hpp"
#include "cigen/rng.hpp"

namespace cigen {

std::vector<Matrix> sample_null(const ConditionalSampler& sampler, const Matrix& z, std::size_t m,
                                std::uint64_t seed) {
  if (z.cols() != sampler.z_dim()) throw ShapeError("sample_null: z has the wrong number of columns");
  std::vector<Matrix> draws;
  draws.reserve(m);
  for (std::size_t i = 0; i < m; ++i) draws.push_back(sampler.sample(z, derive_seed(seed, {i})));
  return draws;
}

std::string_view to_string(GanObjective objective) {
  return objective == GanObjective::printed ? "printed" : "logistic";
}

GanObjective parse_gan_objective(std::string_view name) {
  if (name == "printed") return GanObjective::printed;
  if (name == "logistic") return GanObjective::logistic;
  throw ConfigError("unknown GAN objective '" + std::string(name) + "' (expected printed|logistic)");
}

void validate(const GanConfig& c) {
  if (c.iterations < 1) throw ConfigError("gan: iterations must be >= 1");
  if (c.batch_size < 1) throw ConfigError("gan: batch_size must be >= 1");
  if (c.disc_steps_per_gen_step < 1) throw ConfigError("gan: disc_steps_per_gen_step must be >= 1");
  if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) throw ConfigError("gan: lambda must be finite and >= 0");
  if (!(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0)) throw ConfigError("gan: holdout_fraction must be in [0, 1)");
  if (!(c.generator_learning_rate > 0.0) || !(c.discriminator_learning_rate > 0.0)) {
    throw ConfigError("gan: learning rates must be positive");
  }
  if (!(c.generator_ema >= 0.0 && c.generator_ema < 1.0)) throw ConfigError("gan: generator_ema must be in [0, 1)");
  if (!(c.final_learning_rate_fraction > 0.0 && c.final_learning_rate_fraction <= 1.0)) {
    throw ConfigError("gan: final_learning_rate_fraction must be in (0, 1]");
  }
  for (Activation a : {c.generator_activation, c.discriminator_activation}) {
    if (a != Activation::tanh && a != Activation::relu) throw ConfigError("gan: hidden activation must be tanh or relu");
  }
}

Index resolved_noise_dim(const GanConfig& config, Index x_dim) {
  return config.noise_dim > 0 ? config.noise_dim : std::max<Index>(x_dim, 5);
}

std::vector<Index> resolved_hidden(const std::vector<Index>& requested, Index z_dim) {
  if (!requested.empty()) return requested;
  const Index width = std::max<Index>(32, 2 * z_dim);
  return {width, width};
}

namespace {

void check_batch(const Mlp& d, const Matrix& real_x, const Matrix& fake_x, const Matrix& z) {
  if (real_x.rows() != fake_x.rows() || real_x.rows() != z.rows()) {
    throw ShapeError("adversarial loss: real, fake and z row counts differ");
  }
  if (real_x.rows() == 0) throw ShapeError("adversarial loss: empty batch");
  if (d.input_dim() != real_x.cols() + z.cols()) throw ShapeError("adversarial loss: discriminator input dimension");
}

std::vector<Index> layer_dims(Index in, const std::vector<Index>& hidden, Index out) {
  std::vector<Index> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

// Shuffled pass over the training rows, handing out fixed-size batches.
class BatchStream {
 public:
  BatchStream(std::vector<std::size_t> rows, std::size_t batch, std::uint64_t seed)
      : rows_(std::move(rows)), batch_(batch), rng_(make_rng(seed)) {
    reshuffle();
  }

  std::vector<std::size_t> next() {
    if (cursor_ + batch_ > rows_.size()) {
      reshuffle();
      ++epoch_;
    }
    std::vector<std::size_t> out(rows_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 rows_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_));
    cursor_ += batch_;
    return out;
  }

  std::size_t epoch() const { return epoch_; }

 private:
  void reshuffle() {
    const auto perm = random_permutation(rows_.size(), rng_);
    std::vector<std::size_t> shuffled(rows_.size());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = rows_[perm[i]];
    rows_ = std::move(shuffled);
    cursor_ = 0;
  }

  std::vector<std::size_t> rows_;
  std::size_t batch_;
  Rng rng_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

Matrix uniform_noise(Index rows, Index cols, Rng& rng) {
  Matrix v(rows, cols);
  for (Index i = 0; i < v.size(); ++i) v.data()[i] = uniform01(rng);
  return v;
}

// v ~ U[0,1] enters the generator centred and scaled to unit variance so it
// carries as much weight as the standardised z at initialisation.
Matrix generator_input(const Matrix& noise, const Matrix& z_std) {
  const double k = std::sqrt(12.0);
  return hconcat((noise.array() - 0.5) * k, z_std);
}

void column_moments(const Matrix& m, RowVector& mean, RowVector& scale) {
  mean = m.colwise().mean();
  scale.resize(m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    const double var = (m.col(c).array() - mean(c)).square().mean();
    scale(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
}

}  // namespace

double discriminator_loss(const Mlp& discriminator, const Matrix& real_x, const Matrix& fake_x, const Matrix& z) {
  check_batch(discriminator, real_x, fake_x, z);
  const double d_real = discriminator.forward(hconcat(real_x, z)).mean();
  const double d_fake = discriminator.forward(hconcat(fake_x, z)).mean();
  return d_real + (1.0 - d_fake);
}

double generator_adversarial_loss(const Mlp& discriminator, const Matrix& fake_x, const Matrix& real_x,
                                  const Matrix& z) {
  check_batch(discriminator, real_x, fake_x, z);
  const double d_fake = discriminator.forward(hconcat(fake_x, z)).mean();
  const double d_real = discriminator.forward(hconcat(real_x, z)).mean();
  return d_fake - d_real;
}

Matrix NullSampler::standardize_x(const Matrix& x) const {
  return (x.rowwise() - x_mean_).array().rowwise() / x_scale_.array();
}

Matrix NullSampler::standardize_z(const Matrix& z) const {
  return (z.rowwise() - z_mean_).array().rowwise() / z_scale_.array();
}

Matrix NullSampler::unstandardize_x(const Matrix& x) const {
  Matrix out = x.array().rowwise() * x_scale_.array();
  out.rowwise() += x_mean_;
  return out;
}

Matrix NullSampler::generate_standardized(const Matrix& z_std, const Matrix& noise) const {
  return generator_.forward(generator_input(noise, z_std));
}

Matrix NullSampler::draw_noise(Index rows, std::uint64_t seed) const {
  Rng rng = make_rng(seed);
  return uniform_noise(rows, noise_dim_, rng);
}

Matrix NullSampler::generate(const Matrix& z, const Matrix& noise) const {
  if (z.cols() != z_dim()) throw ShapeError("NullSampler: z has " + std::to_string(z.cols()) + " columns, expected " + std::to_string(z_dim()));
  if (noise.cols() != noise_dim_ || noise.rows() != z.rows()) throw ShapeError("NullSampler: noise shape mismatch");
  return unstandardize_x(generate_standardized(standardize_z(z), noise));
}

Matrix NullSampler::sample(const Matrix& z, std::uint64_t seed) const {
  return generate(z, draw_noise(z.rows(), seed));
}

double NullSampler::evaluate_generator_loss(const Matrix& x, const Matrix& z, std::uint64_t noise_seed) const {
  const Matrix zs = standardize_z(z);
  const Matrix fake = generate_standardized(zs, draw_noise(z.rows(), noise_seed));
  return generator_adversarial_loss(discriminator_, fake, standardize_x(x), zs);
}

double NullSampler::evaluate_discriminator_loss(const Matrix& x, const Matrix& z, std::uint64_t noise_seed) const {
  const Matrix zs = standardize_z(z);
  const Matrix fake = generate_standardized(zs, draw_noise(z.rows(), noise_seed));
  return discriminator_loss(discriminator_, standardize_x(x), fake, zs);
}

NullSampler make_null_sampler(Mlp generator, Mlp discriminator, Index noise_dim, Index x_dim) {
  NullSampler s;
  const Index z_dim = generator.input_dim() - noise_dim;
  if (z_dim < 1 || generator.output_dim() != x_dim) throw ShapeError("make_null_sampler: generator dimensions");
  s.generator_ = std::move(generator);
  s.discriminator_ = std::move(discriminator);
  s.noise_dim_ = noise_dim;
  s.x_mean_ = RowVector::Zero(x_dim);
  s.x_scale_ = RowVector::Ones(x_dim);
  s.z_mean_ = RowVector::Zero(z_dim);
  s.z_scale_ = RowVector::Ones(z_dim);
  return s;
}

NullSampler train_null_sampler(const Matrix& x_raw, const Matrix& z_raw, const GanConfig& config) {
  validate(config);
  if (x_raw.rows() != z_raw.rows()) throw ShapeError("train_null_sampler: x and z row counts differ");
  require_finite(x_raw, "x");
  require_finite(z_raw, "z");
  const auto n = static_cast<std::size_t>(x_raw.rows());
  if (n < 2 * config.batch_size) {
    throw ConfigError("train_null_sampler: need n >= 2 * batch_size (n = " + std::to_string(n) +
                      ", batch_size = " + std::to_string(config.batch_size) + ")");
  }

  const Index dx = x_raw.cols();
  const Index dz = z_raw.cols();
  const std::uint64_t seed = config.seed;

  NullSampler s;
  s.noise_dim_ = resolved_noise_dim(config, dx);
  s.diagnostic_seed_ = derive_seed(seed, {6});

  // Held-out rows for the final-loss diagnostic.
  Rng split_rng = make_rng(derive_seed(seed, {7}));
  auto order = random_permutation(n, split_rng);
  auto holdout_count = static_cast<std::size_t>(std::floor(config.holdout_fraction * static_cast<double>(n)));
  if (n - holdout_count < config.batch_size) holdout_count = n - config.batch_size;
  s.holdout_rows_.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout_count));
  std::sort(s.holdout_rows_.begin(), s.holdout_rows_.end());
  std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(holdout_count), order.end());
  std::sort(train_rows.begin(), train_rows.end());

  column_moments(select_rows(x_raw, train_rows), s.x_mean_, s.x_scale_);
  column_moments(select_rows(z_raw, train_rows), s.z_mean_, s.z_scale_);
  const Matrix x = s.standardize_x(x_raw);
  const Matrix z = s.standardize_z(z_raw);

  s.generator_ = Mlp::xavier(layer_dims(s.noise_dim_ + dz, resolved_hidden(config.generator_hidden, dz), dx),
                             config.generator_activation, Activation::identity, derive_seed(seed, {1}));
  s.discriminator_ = Mlp::xavier(layer_dims(dx + dz, resolved_hidden(config.discriminator_hidden, dz), 1),
                                 config.discriminator_activation, Activation::sigmoid, derive_seed(seed, {2}));
  AdamConfig g_adam, d_adam;
  g_adam.learning_rate = config.generator_learning_rate;
  d_adam.learning_rate = config.discriminator_learning_rate;
  AdamState g_state(s.generator_.parameters(), g_adam);
  AdamState d_state(s.discriminator_.parameters(), d_adam);

  const bool use_info = config.lambda > 0.0;
  const bool logistic = config.objective == GanObjective::logistic;
  InfoNet info;
  if (use_info) info = InfoNet(dx, config.info, derive_seed(seed, {3}));

  BatchStream stream(train_rows, config.batch_size, derive_seed(seed, {4}));
  Rng noise_rng = make_rng(derive_seed(seed, {5}));
  Rng perm_rng = make_rng(derive_seed(seed, {8}));

  const auto& diag_rows = s.holdout_rows_.empty() ? train_rows : s.holdout_rows_;
  const Matrix diag_x = select_rows(x, diag_rows);
  const Matrix diag_z = select_rows(z, diag_rows);
  const Matrix diag_noise = s.draw_noise(diag_x.rows(), s.diagnostic_seed_);
  auto heldout_d_loss = [&] {
    return discriminator_loss(s.discriminator_, diag_x, s.generate_standardized(diag_z, diag_noise), diag_z);
  };

  const auto batch = static_cast<Index>(config.batch_size);
  const double inv_b = 1.0 / static_cast<double>(batch);
  ForwardCache g_cache, d_cache;
  Parameters d_grads = zeros_like(s.discriminator_.parameters());
  Parameters g_grads = zeros_like(s.generator_.parameters());

  const bool use_ema = config.generator_ema > 0.0;
  Parameters ema = s.generator_.parameters();
  auto update_ema = [&] {
    auto& p = s.generator_.parameters();
    for (std::size_t l = 0; l < p.size(); ++l) {
      ema[l].weight = config.generator_ema * ema[l].weight + (1.0 - config.generator_ema) * p[l].weight;
      ema[l].bias = config.generator_ema * ema[l].bias + (1.0 - config.generator_ema) * p[l].bias;
    }
  };

  EpochLosses running;
  std::size_t running_count = 0;
  std::size_t current_epoch = 0;
  double last_check = heldout_d_loss();

  auto flush_epoch = [&] {
    if (running_count == 0) return;
    const double k = static_cast<double>(running_count);
    s.curve_.push_back({running.discriminator / k, running.generator / k, running.information / k});
    running = {};
    running_count = 0;
  };

  for (std::size_t it = 0; it < config.iterations; ++it) {
    const double progress = static_cast<double>(it) / static_cast<double>(config.iterations);
    const double lr_scale = 1.0 - (1.0 - config.final_learning_rate_fraction) * progress;
    g_state.config.learning_rate = config.generator_learning_rate * lr_scale;
    d_state.config.learning_rate = config.discriminator_learning_rate * lr_scale;
    double d_loss = 0.0;
    double mean_d_real = 0.0;
    for (std::size_t k = 0; k < config.disc_steps_per_gen_step; ++k) {
      const auto rows = stream.next();
      const Matrix zb = select_rows(z, rows);
      Matrix d_in(2 * batch, dx + dz);
      d_in.topLeftCorner(batch, dx) = select_rows(x, rows);
      d_in.bottomLeftCorner(batch, dx) = s.generator_.forward(generator_input(uniform_noise(batch, s.noise_dim_, noise_rng), zb));
      d_in.topRightCorner(batch, dz) = zb;
      d_in.bottomRightCorner(batch, dz) = zb;
      const Matrix out = s.discriminator_.forward(d_in, d_cache);
      mean_d_real = out.topRows(batch).mean();
      d_loss = mean_d_real + 1.0 - out.bottomRows(batch).mean();
      Matrix upstream(2 * batch, 1);
      if (logistic) {
        upstream.topRows(batch) = inv_b / (1.0 - out.topRows(batch).array());
        upstream.bottomRows(batch) = -inv_b / out.bottomRows(batch).array();
      } else {
        upstream.topRows(batch).setConstant(inv_b);
        upstream.bottomRows(batch).setConstant(-inv_b);
      }
      s.discriminator_.backward(d_cache, upstream, &d_grads);
      adam_step(d_state, s.discriminator_.parameters(), d_grads);
    }

    if (use_info) {
      const auto rows = stream.next();
      const Matrix xb = select_rows(x, rows);
      const Matrix fake = s.generator_.forward(generator_input(uniform_noise(batch, s.noise_dim_, noise_rng), select_rows(z, rows)));
      for (std::size_t step = 0; step < config.info.inner_steps; ++step) {
        info.ascent_step(xb, fake, random_permutation(static_cast<std::size_t>(batch), perm_rng));
      }
    }

    const auto rows = stream.next();
    const Matrix zb = select_rows(z, rows);
    const Matrix fake = s.generator_.forward(generator_input(uniform_noise(batch, s.noise_dim_, noise_rng), zb), g_cache);
    const Matrix d_fake = s.discriminator_.forward(hconcat(fake, zb), d_cache);
    const double g_loss = d_fake.mean() - mean_d_real;
    Matrix d_input_grad;
    const Matrix fake_upstream =
        logistic ? Matrix(inv_b / (1.0 - d_fake.array())) : Matrix::Constant(batch, 1, inv_b);
    s.discriminator_.backward(d_cache, fake_upstream, nullptr, &d_input_grad);
    Matrix g_upstream = d_input_grad.leftCols(dx);
    double info_value = 0.0;
    if (use_info) {
      Matrix info_grad;
      const DvValue dv = info.objective_and_input_gradient(select_rows(x, rows), fake,
                                                           random_permutation(static_cast<std::size_t>(batch), perm_rng),
                                                           info_grad);
      info_value = dv.value;
      g_upstream += config.lambda * info_grad;
    }
    s.generator_.backward(g_cache, g_upstream, &g_grads);
    adam_step(g_state, s.generator_.parameters(), g_grads);
    if (use_ema) update_ema();

    if (!std::isfinite(d_loss) || !std::isfinite(g_loss) || !std::isfinite(info_value)) {
      throw TrainingDivergedError("GAN training diverged: non-finite loss in epoch " + std::to_string(stream.epoch()),
                                  stream.epoch());
    }

    if (stream.epoch() != current_epoch) {
      flush_epoch();
      current_epoch = stream.epoch();
    }
    running.discriminator += d_loss;
    running.generator += g_loss;
    running.information += info_value;
    ++running_count;
    s.iterations_run_ = it + 1;

    if (config.early_stop_window > 0 && config.early_stop_tolerance > 0.0 && (it + 1) % config.early_stop_window == 0) {
      const double now = heldout_d_loss();
      if (std::abs(now - last_check) < config.early_stop_tolerance) {
        s.early_stopped_ = true;
        break;
      }
      last_check = now;
    }
  }
  flush_epoch();
  if (use_ema) s.generator_.parameters() = ema;

  s.final_generator_loss_ = generator_adversarial_loss(s.discriminator_, s.generate_standardized(diag_z, diag_noise), diag_x, diag_z);
  s.final_discriminator_loss_ = heldout_d_loss();
  if (!std::isfinite(s.final_generator_loss_) || !std::isfinite(s.final_discriminator_loss_)) {
    throw TrainingDivergedError("GAN training diverged: non-finite final loss", stream.epoch());
  }
  return s;
}

}  // namespace cigen
