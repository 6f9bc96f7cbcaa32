// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_CONSISTENCY_HPP
#define WEAKPRIOR_CONSISTENCY_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "weakprior/core.hpp"
#include "weakprior/forward_ops.hpp"
#include "weakprior/mixture_posterior.hpp"

namespace weakprior {

/// Dimension up to which ball masses are integrated numerically.
inline constexpr std::size_t kMaxQuadratureDim = 3;

/// P(||X - center|| <= radius) for X ~ N(mean, cov), n <= 3. The covariance
/// is diagonalized and the resulting sum of independent squared normals is
/// integrated by nested Gauss-Legendre rules around a closed-form innermost
/// coordinate.
double gaussian_ball_probability(const Vector& mean, const Matrix& cov, const Vector& center, double radius);

struct BallMass {
  double mass = 0.0;
  double se = 0.0;  // 0 when integrated
  bool quadrature = false;
};

/// Mixture of Gaussians given as parallel lists.
struct GaussianList {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
};

GaussianList as_gaussian_list(const PosteriorMixture& post);
GaussianList as_gaussian_list(const GaussianMixturePrior& prior);

/// Quadrature for n <= 3, otherwise (or when forced) `samples` Monte Carlo draws.
BallMass ball_mass(const GaussianList& mix, const Vector& center, double radius, Rng& rng,
                   std::size_t samples = 100000, bool force_monte_carlo = false);

struct ConsistencyConfig {
  std::vector<std::size_t> n_values{0, 1, 2, 5, 10, 20, 50, 100, 200, 500};
  /// Unset: half the smallest distance between two means of the same prior.
  std::optional<double> ball_radius;
  std::size_t mc_samples = 100000;
  std::size_t threads = 1;
};

struct ConsistencyRow {
  std::size_t n_obs = 0;
  double mass_a = 0.0;
  double se_a = 0.0;
  double mass_b = 0.0;
  double se_b = 0.0;
  std::size_t winner_a = 0;
  std::size_t winner_b = 0;
  double gap_a = 0.0;  // per-scalar selection-score gap (0 at N = 0)
  double gap_b = 0.0;
};

struct ConsistencyResult {
  std::vector<ConsistencyRow> rows;
  double ball_radius = 0.0;
};

double default_ball_radius(const GaussianMixturePrior& a, const GaussianMixturePrior& b);

/// Draws y_1..y_Nmax = A x* + eps_i once; row N uses the first N draws.
ConsistencyResult consistency_sweep(const GaussianMixturePrior& prior_a, const GaussianMixturePrior& prior_b,
                                    const Vector& x_star, const LinearOperator& op, double sigma,
                                    const ConsistencyConfig& config, Rng& rng);

struct ConsistencyPreset {
  GaussianMixturePrior prior_a;
  GaussianMixturePrior prior_b;
  Vector x_star;
  LinearOperator op;
  double sigma;
  ConsistencyConfig config;
};

/// n = 2, m = 2, dense random A; two 3-component priors whose means are at
/// least 1.2 apart within and across priors; x* uniform in [-1, 1]^2.
ConsistencyPreset make_consistency_preset(Rng& rng);

inline constexpr std::uint64_t kDefaultConsistencySeed = 2;

/// Builds the preset from Rng(seed) and continues that stream for the data.
ConsistencyResult run_consistency_preset(std::uint64_t seed = kDefaultConsistencySeed, std::size_t threads = 1);

}  // namespace weakprior

#endif  // WEAKPRIOR_CONSISTENCY_HPP
