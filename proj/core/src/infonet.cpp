#include "cigen/infonet.hpp"

#include <algorithm>
#include <cmath>

#include "cigen/error.hpp"
#include "cigen/rng.hpp"

namespace cigen {

namespace {

struct DvParts {
  DvValue value;
  Matrix paired_grad;    // dJ / dT(paired)
  Matrix marginal_grad;  // dJ / dT(marginal)
};

DvParts dv_from_outputs(const Matrix& tp, const Matrix& tq) {
  const Index n = tp.rows();
  const Index m = tq.rows();
  DvParts parts;
  Vector clipped(m);
  for (Index j = 0; j < m; ++j) {
    clipped(j) = std::min(tq(j, 0), kDvClamp);
    if (tq(j, 0) >= kDvClamp) parts.value.saturated = true;
  }
  const double top = clipped.maxCoeff();
  const Vector shifted = (clipped.array() - top).exp();
  const double total = shifted.sum();
  const double log_mean_exp = top + std::log(total / static_cast<double>(m));
  parts.value.value = tp.mean() - log_mean_exp;
  parts.paired_grad = Matrix::Constant(n, 1, 1.0 / static_cast<double>(n));
  parts.marginal_grad.resize(m, 1);
  for (Index j = 0; j < m; ++j) {
    parts.marginal_grad(j, 0) = tq(j, 0) >= kDvClamp ? 0.0 : -shifted(j) / total;
  }
  return parts;
}

void check_rows(const Matrix& paired, const Matrix& marginal) {
  if (paired.rows() < 2 || marginal.rows() < 2) throw DegenerateInputError("dv_objective requires n >= 2");
}

void add_to(Parameters& acc, const Parameters& g) {
  for (std::size_t k = 0; k < acc.size(); ++k) {
    acc[k].weight += g[k].weight;
    acc[k].bias += g[k].bias;
  }
}

}  // namespace

DvValue dv_objective(const Mlp& statistics_net, const Matrix& paired, const Matrix& marginal) {
  check_rows(paired, marginal);
  return dv_from_outputs(statistics_net.forward(paired), statistics_net.forward(marginal)).value;
}

Matrix marginal_pairs(const Matrix& x, const Matrix& x_tilde, const std::vector<std::size_t>& perm) {
  if (x.rows() != x_tilde.rows() || perm.size() != static_cast<std::size_t>(x.rows())) {
    throw ShapeError("marginal_pairs: row counts differ");
  }
  Matrix out(x.rows(), x.cols() + x_tilde.cols());
  out.leftCols(x.cols()) = x;
  for (Index i = 0; i < x.rows(); ++i) out.row(i).tail(x_tilde.cols()) = x_tilde.row(static_cast<Index>(perm[static_cast<std::size_t>(i)]));
  return out;
}

InfoNet::InfoNet(Index x_dim, const InfoNetConfig& config, std::uint64_t seed)
    : net_(Mlp::xavier({2 * x_dim, config.hidden, 1}, Activation::tanh, Activation::identity, seed)),
      config_(config) {
  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  adam_ = AdamState(net_.parameters(), adam);
}

DvValue InfoNet::objective_and_parameter_gradient(const Matrix& paired, const Matrix& marginal,
                                                  Parameters& grads) const {
  check_rows(paired, marginal);
  ForwardCache pc, mc;
  net_.forward(paired, pc);
  net_.forward(marginal, mc);
  const DvParts parts = dv_from_outputs(pc.output, mc.output);
  grads = zeros_like(net_.parameters());
  Parameters g2 = zeros_like(net_.parameters());
  net_.backward(pc, parts.paired_grad, &grads);
  net_.backward(mc, parts.marginal_grad, &g2);
  add_to(grads, g2);
  return parts.value;
}

double InfoNet::ascent_step(const Matrix& x, const Matrix& x_tilde, const std::vector<std::size_t>& perm) {
  Parameters grads;
  const DvValue v = objective_and_parameter_gradient(hconcat(x, x_tilde), marginal_pairs(x, x_tilde, perm), grads);
  for (auto& layer : grads) {
    layer.weight = -layer.weight;
    layer.bias = -layer.bias;
  }
  adam_step(adam_, net_.parameters(), grads);
  return v.value;
}

DvValue InfoNet::objective_and_input_gradient(const Matrix& x, const Matrix& x_tilde,
                                              const std::vector<std::size_t>& perm, Matrix& grad_x_tilde) const {
  const Matrix paired = hconcat(x, x_tilde);
  const Matrix marginal = marginal_pairs(x, x_tilde, perm);
  check_rows(paired, marginal);
  ForwardCache pc, mc;
  net_.forward(paired, pc);
  net_.forward(marginal, mc);
  const DvParts parts = dv_from_outputs(pc.output, mc.output);
  Matrix gp, gm;
  net_.backward(pc, parts.paired_grad, nullptr, &gp);
  net_.backward(mc, parts.marginal_grad, nullptr, &gm);
  const Index dx = x.cols();
  grad_x_tilde = gp.rightCols(x_tilde.cols());
  for (Index j = 0; j < x.rows(); ++j) {
    grad_x_tilde.row(static_cast<Index>(perm[static_cast<std::size_t>(j)])) += gm.row(j).segment(dx, x_tilde.cols());
  }
  return parts.value;
}

DvValue InfoNet::evaluate(const Matrix& x, const Matrix& x_tilde, const std::vector<std::size_t>& perm) const {
  return dv_objective(net_, hconcat(x, x_tilde), marginal_pairs(x, x_tilde, perm));
}

MiEstimate fit_and_estimate(const Matrix& x, const Matrix& x_tilde, std::size_t steps, std::uint64_t seed,
                            const InfoNetConfig& config) {
  if (x.rows() != x_tilde.rows()) throw ShapeError("fit_and_estimate: row counts differ");
  if (x.rows() < 2) throw DegenerateInputError("fit_and_estimate requires n >= 2");
  require_finite(x, "x");
  require_finite(x_tilde, "x_tilde");
  InfoNet net(x.cols(), config, derive_seed(seed, {1}));
  Rng rng = make_rng(derive_seed(seed, {2}));
  const auto n = static_cast<std::size_t>(x.rows());
  for (std::size_t s = 0; s < steps; ++s) {
    const double v = net.ascent_step(x, x_tilde, random_permutation(n, rng));
    if (!std::isfinite(v)) throw TrainingDivergedError("information network objective diverged", s);
  }
  MiEstimate out;
  const DvValue final_value = net.evaluate(x, x_tilde, random_permutation(n, rng));
  if (!std::isfinite(final_value.value)) throw TrainingDivergedError("information network objective diverged", steps);
  out.value = final_value.value;
  out.saturated = final_value.saturated;
  out.steps = steps;
  return out;
}

}  // namespace cigen
