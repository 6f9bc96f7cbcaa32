// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_IDENTIFIABILITY_HPP
#define WEAKPRIOR_IDENTIFIABILITY_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "weakprior/core.hpp"
#include "weakprior/mixture_posterior.hpp"

namespace weakprior {

/// Per-dimension score gaps over a dataset when each image, observed
/// through a fresh random mask, is scored against every dataset image.
struct GapStats {
  std::vector<double> gaps;      // delta_i, normalized by 2 (sigma^2 + tau^2)
  std::vector<double> mse_gaps;  // unnormalized per-scalar MSE gap
  std::vector<std::size_t> winners;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double mse_mean = 0.0;
  double self_win_rate = 0.0;  // fraction of images whose own mean wins
  std::size_t flagged = 0;     // non-identifiable observations
  double keep_fraction = 0.0;
  std::string label;
};

GapStats dataset_gap_stats(const SyntheticDataset& dataset, double keep_fraction, double sigma, double tau,
                           Rng& rng, std::size_t threads = 1);

struct HoeffdingCheck {
  double separation = 0.0;  // Delta = min_j (1/n) ||mu_j - mu_j*||^2
  double threshold = 0.0;   // Delta / (8 (sigma^2 + tau^2))
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t components = 0;
  std::size_t jstar = 0;
  double sigma = 0.0;
  double tau = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;      // delta(y) < threshold
  double frequency = 0.0;
  double standard_error = 0.0;  // binomial SE at the predicted bound
  double predicted_bound = 0.0;  // 2(M-1)e^{-m D^2/32} + 2(M-1)e^{-m D^2/(32(s^2+t^2))}
  double mask_bound = 0.0;
  double noise_bound = 0.0;
  // Noise term with a = Delta / 4 carried through: 2(M-1)e^{-m D^2/(512(s^2+t^2))}.
  double noise_bound_a4 = 0.0;
  bool passes = false;  // frequency <= min(1, bound) + 3 SE
  // Sub-check on the sampled separation d_hat_j = (1/m) ||(mu_j - mu_j*)_Omega||^2.
  std::size_t dhat_failures = 0;  // worst j: count of |d_hat_j - d_j| >= Delta / 2
  double dhat_frequency = 0.0;
  double dhat_bound = 0.0;  // 2 exp(-m Delta^2 / 32)
  bool dhat_passes = false;
};

/// Monte Carlo over (mask, xi, eps): x = mu_j* + tau xi, y = x_Omega + sigma eps
/// with Omega a uniform m-subset of [0, n).
HoeffdingCheck hoeffding_validate(const std::vector<Vec64>& means, std::size_t jstar, std::size_t m, double sigma,
                                  double tau, std::size_t trials, Rng& rng, std::size_t threads = 1);

/// M means in [-1, 1]^n whose squared per-coordinate distance to component 0
/// is exactly `separation` at every coordinate.
std::vector<Vec64> make_separated_means(std::size_t n, std::size_t components, double separation, Rng& rng);

struct BoxGapRow {
  double fraction = 0.0;
  std::size_t m = 0;
  double mean_delta = 0.0;
  double se_delta = 0.0;
  double mean_mse_gap = 0.0;
  std::size_t flagged = 0;
};

struct BoxGapConfig {
  std::vector<double> fractions{0.3, 0.4, 0.5, 0.6};
  double sigma = 0.01;
  std::size_t trials = 100;
  /// When > 0, means are first replaced by mu_0 outside the centered box of
  /// this fraction, so they differ only inside it.
  double confine_fraction = 0.0;
};

/// Mean delta(y) of box-masked observations of the world, per box fraction.
/// Each trial draws one (component, xi, eps) and reuses it for every
/// fraction. Fraction 0 means the unmasked image.
std::vector<BoxGapRow> box_gap_sweep(const GaussianMixturePrior& world, ImageShape shape, const BoxGapConfig& config,
                                     Rng& rng);

/// Returns `world` with every mean set to mu_0 outside the centered box.
GaussianMixturePrior confine_to_box(const GaussianMixturePrior& world, ImageShape shape, double box_fraction);

}  // namespace weakprior

#endif  // WEAKPRIOR_IDENTIFIABILITY_HPP
