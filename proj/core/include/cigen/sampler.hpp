#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cigen/numerics.hpp"

namespace cigen {

// Draws X~ ~ q(X | Z) row-wise for a given conditioning matrix.
class ConditionalSampler {
 public:
  virtual ~ConditionalSampler() = default;

  virtual Index x_dim() const = 0;
  virtual Index z_dim() const = 0;

  // One draw per row of z. Deterministic in (z, seed); safe to call concurrently.
  virtual Matrix sample(const Matrix& z, std::uint64_t seed) const = 0;

  // Final generator loss for learned samplers; nothing for parametric ones.
  virtual std::optional<double> bound_diagnostic() const { return std::nullopt; }
};

// m i.i.d. draws at z; draw i uses derive_seed(seed, {i}).
std::vector<Matrix> sample_null(const ConditionalSampler& sampler, const Matrix& z, std::size_t m,
                                std::uint64_t seed);

}  // namespace cigen
