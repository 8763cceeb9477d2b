#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "cigen/rng.hpp"

namespace cigen {

// Row-major dense matrix; rows are observations.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Throws DegenerateInputError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

Matrix hconcat(const Matrix& left, const Matrix& right);
Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows);

enum class Activation { identity, tanh, relu, sigmoid };

// Pre-activations are clamped to this magnitude before the sigmoid.
inline constexpr double kSigmoidClamp = 30.0;

struct DenseLayer {
  Matrix weight;  // fan_in x fan_out
  RowVector bias;
};

using Parameters = std::vector<DenseLayer>;

Parameters zeros_like(const Parameters& params);
std::size_t parameter_count(const Parameters& params);

// Per-layer values kept by a training forward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;          // input to layer i
  std::vector<Matrix> pre_activations; // input_i * W_i + b_i
  Matrix output;
};

class Mlp {
 public:
  Mlp() = default;
  // Zero-initialised network; dims = {input, hidden..., output}.
  Mlp(std::vector<Index> dims, Activation hidden, Activation output);
  // Xavier-uniform weights, zero biases.
  static Mlp xavier(std::vector<Index> dims, Activation hidden, Activation output,
                    std::uint64_t seed);

  Index input_dim() const { return dims_.front(); }
  Index output_dim() const { return dims_.back(); }
  const std::vector<Index>& dims() const { return dims_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  std::size_t parameter_count() const { return cigen::parameter_count(params_); }

  Parameters& parameters() { return params_; }
  const Parameters& parameters() const { return params_; }

  Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, ForwardCache& cache) const;

  // Reverse pass from dLoss/dOutput. Either output may be null to skip it.
  void backward(const ForwardCache& cache, const Matrix& upstream, Parameters* param_grads,
                Matrix* input_grad = nullptr) const;
  Parameters backward(const Matrix& input, const Matrix& upstream) const;

 private:
  Activation activation_of(std::size_t layer) const {
    return layer + 1 == params_.size() ? output_ : hidden_;
  }

  std::vector<Index> dims_;
  Activation hidden_ = Activation::tanh;
  Activation output_ = Activation::identity;
  Parameters params_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(const Parameters& like, AdamConfig cfg = {})
      : config(cfg), first_moment(zeros_like(like)), second_moment(zeros_like(like)) {}

  AdamConfig config;
  std::int64_t step = 0;
  Parameters first_moment;
  Parameters second_moment;
};

// Bias-corrected Adam descent step on params.
void adam_step(AdamState& state, Parameters& params, const Parameters& grads);

// Scalar loss of the network output and its gradient with respect to that output.
using LossFn = std::function<std::pair<double, Matrix>(const Matrix& output)>;

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t compared = 0;
  // Parameters whose central difference straddles a ReLU kink.
  std::vector<std::size_t> excluded;
};

// Central-difference check of backward() for every parameter of net.
GradientCheckReport gradient_check(const Mlp& net, const LossFn& loss, const Matrix& input,
                                   double step = 1e-5);

}  // namespace cigen
