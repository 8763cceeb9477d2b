#include "cigen/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cigen/error.hpp"

namespace cigen {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw DegenerateInputError(std::string(what) + " contains NaN or Inf");
}

Matrix hconcat(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) throw ShapeError("hconcat: row counts differ");
  Matrix out(left.rows(), left.cols() + right.cols());
  out.leftCols(left.cols()) = left;
  out.rightCols(right.cols()) = right;
  return out;
}

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(static_cast<Index>(rows[i]));
  return out;
}

Parameters zeros_like(const Parameters& params) {
  Parameters out;
  out.reserve(params.size());
  for (const auto& layer : params) {
    out.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                   RowVector::Zero(layer.bias.size())});
  }
  return out;
}

std::size_t parameter_count(const Parameters& params) {
  std::size_t n = 0;
  for (const auto& layer : params) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

namespace {

void activate(Matrix& m, Activation act) {
  switch (act) {
    case Activation::identity:
      break;
    case Activation::tanh:
      // Eigen's vectorised exp is far faster than its scalar double tanh.
      m = 1.0 - 2.0 / ((2.0 * m.array()).exp() + 1.0);
      break;
    case Activation::relu:
      m = m.array().max(0.0);
      break;
    case Activation::sigmoid:
      m = 1.0 / (1.0 + (-m.array().min(kSigmoidClamp).max(-kSigmoidClamp)).exp());
      break;
  }
}

// In-place: grad <- grad * act'(pre), using the post-activation value where cheaper.
void apply_derivative(Matrix& grad, const Matrix& pre, const Matrix& post, Activation act) {
  switch (act) {
    case Activation::identity:
      break;
    case Activation::tanh:
      grad.array() *= 1.0 - post.array().square();
      break;
    case Activation::relu:
      grad.array() *= (pre.array() > 0.0).cast<double>();
      break;
    case Activation::sigmoid:
      grad.array() *= (post.array() * (1.0 - post.array())) *
                      (pre.array().abs() < kSigmoidClamp).cast<double>();
      break;
  }
}

}  // namespace

Mlp::Mlp(std::vector<Index> dims, Activation hidden, Activation output)
    : dims_(std::move(dims)), hidden_(hidden), output_(output) {
  if (dims_.size() < 2) throw ShapeError("Mlp needs at least input and output dimensions");
  for (auto d : dims_) {
    if (d < 1) throw ShapeError("Mlp layer dimensions must be positive");
  }
  params_.reserve(dims_.size() - 1);
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    params_.push_back({Matrix::Zero(dims_[i], dims_[i + 1]), RowVector::Zero(dims_[i + 1])});
  }
}

Mlp Mlp::xavier(std::vector<Index> dims, Activation hidden, Activation output, std::uint64_t seed) {
  Mlp net(std::move(dims), hidden, output);
  Rng rng = make_rng(seed);
  for (auto& layer : net.params_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    for (Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = (2.0 * uniform01(rng) - 1.0) * limit;
    }
  }
  return net;
}

Matrix Mlp::forward(const Matrix& input) const {
  if (input.cols() != input_dim()) {
    throw ShapeError("Mlp::forward: input has " + std::to_string(input.cols()) +
                     " columns, network expects " + std::to_string(input_dim()));
  }
  Matrix h = input;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Matrix next = h * params_[i].weight;
    next.rowwise() += params_[i].bias;
    activate(next, activation_of(i));
    h = std::move(next);
  }
  return h;
}

Matrix Mlp::forward(const Matrix& input, ForwardCache& cache) const {
  if (input.cols() != input_dim()) {
    throw ShapeError("Mlp::forward: input has " + std::to_string(input.cols()) +
                     " columns, network expects " + std::to_string(input_dim()));
  }
  const std::size_t layers = params_.size();
  cache.inputs.resize(layers);
  cache.pre_activations.resize(layers);
  cache.inputs[0] = input;
  for (std::size_t i = 0; i < layers; ++i) {
    Matrix& pre = cache.pre_activations[i];
    pre.noalias() = cache.inputs[i] * params_[i].weight;
    pre.rowwise() += params_[i].bias;
    Matrix post = pre;
    activate(post, activation_of(i));
    if (i + 1 < layers) {
      cache.inputs[i + 1] = std::move(post);
    } else {
      cache.output = std::move(post);
    }
  }
  return cache.output;
}

void Mlp::backward(const ForwardCache& cache, const Matrix& upstream, Parameters* param_grads,
                   Matrix* input_grad) const {
  const std::size_t layers = params_.size();
  if (cache.inputs.size() != layers || upstream.rows() != cache.output.rows() ||
      upstream.cols() != cache.output.cols()) {
    throw ShapeError("Mlp::backward: upstream gradient does not match forward output");
  }
  if (param_grads != nullptr && param_grads->size() != layers) *param_grads = zeros_like(params_);

  Matrix grad = upstream;
  for (std::size_t k = layers; k-- > 0;) {
    const Matrix& post = (k + 1 == layers) ? cache.output : cache.inputs[k + 1];
    apply_derivative(grad, cache.pre_activations[k], post, activation_of(k));
    if (param_grads != nullptr) {
      (*param_grads)[k].weight.noalias() = cache.inputs[k].transpose() * grad;
      (*param_grads)[k].bias = grad.colwise().sum();
    }
    if (k > 0 || input_grad != nullptr) {
      Matrix below = grad * params_[k].weight.transpose();
      grad = std::move(below);
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(grad);
}

Parameters Mlp::backward(const Matrix& input, const Matrix& upstream) const {
  ForwardCache cache;
  forward(input, cache);
  Parameters grads = zeros_like(params_);
  backward(cache, upstream, &grads);
  return grads;
}

void adam_step(AdamState& state, Parameters& params, const Parameters& grads) {
  if (state.first_moment.size() != params.size()) {
    state.first_moment = zeros_like(params);
    state.second_moment = zeros_like(params);
  }
  if (grads.size() != params.size()) throw ShapeError("adam_step: gradient layer count mismatch");
  state.step += 1;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    if (p.rows() != g.rows() || p.cols() != g.cols()) throw ShapeError("adam_step: gradient shape mismatch");
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseAbs2();
    p.array() -= c.learning_rate * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + c.epsilon);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    update(params[i].weight, grads[i].weight, state.first_moment[i].weight, state.second_moment[i].weight);
    update(params[i].bias, grads[i].bias, state.first_moment[i].bias, state.second_moment[i].bias);
  }
}

namespace {

bool relu_pattern_differs(const ForwardCache& a, const ForwardCache& b, const Mlp& net) {
  const std::size_t layers = net.parameters().size();
  for (std::size_t k = 0; k < layers; ++k) {
    const Activation act = (k + 1 == layers) ? net.output_activation() : net.hidden_activation();
    if (act != Activation::relu) continue;
    if (((a.pre_activations[k].array() > 0.0) != (b.pre_activations[k].array() > 0.0)).any()) return true;
  }
  return false;
}

}  // namespace

GradientCheckReport gradient_check(const Mlp& net, const LossFn& loss, const Matrix& input, double step) {
  ForwardCache cache;
  const Matrix out = net.forward(input, cache);
  const auto [base_loss, dout] = loss(out);
  (void)base_loss;
  Parameters analytic = zeros_like(net.parameters());
  net.backward(cache, dout, &analytic);

  GradientCheckReport report;
  Mlp probe = net;
  std::size_t flat = 0;
  ForwardCache plus_cache, minus_cache;

  auto check = [&](double& slot, double analytic_value) {
    const double saved = slot;
    slot = saved + step;
    const double f_plus = loss(probe.forward(input, plus_cache)).first;
    slot = saved - step;
    const double f_minus = loss(probe.forward(input, minus_cache)).first;
    slot = saved;
    if (relu_pattern_differs(plus_cache, minus_cache, probe)) {
      report.excluded.push_back(flat);
    } else {
      const double numeric = (f_plus - f_minus) / (2.0 * step);
      const double denom = std::max({std::abs(analytic_value), std::abs(numeric), 1e-8});
      report.max_relative_error = std::max(report.max_relative_error, std::abs(analytic_value - numeric) / denom);
      ++report.compared;
    }
    ++flat;
  };

  auto& params = probe.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Index i = 0; i < params[k].weight.size(); ++i) check(params[k].weight.data()[i], analytic[k].weight.data()[i]);
    for (Index i = 0; i < params[k].bias.size(); ++i) check(params[k].bias.data()[i], analytic[k].bias.data()[i]);
  }
  return report;
}

}  // namespace cigen
