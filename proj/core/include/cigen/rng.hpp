#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace cigen {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Counter-based seed derivation: the result depends only on the arguments,
// never on call order, so parallel schedules reproduce serial ones.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept;

Rng make_rng(std::uint64_t seed);

// Uniform on [0, 1) with 53 random bits.
double uniform01(Rng& rng);

double standard_normal(Rng& rng);

// Laplace(0, scale) by inverse CDF.
double laplace(Rng& rng, double scale);

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace cigen
