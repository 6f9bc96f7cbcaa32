// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic Gaussian-mixture image worlds standing in for natural-image
// datasets: every mean shares a smooth base image and carries its own
// high-frequency detail concentrated toward the image center.

#ifndef WEAKPRIOR_WORLDS_HPP
#define WEAKPRIOR_WORLDS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "weakprior/core.hpp"
#include "weakprior/mixture_posterior.hpp"

namespace weakprior {

struct WorldConfig {
  ImageShape shape{16, 16, 3};
  std::size_t components = 4;
  double tau = 0.05;
  double base_amplitude = 0.3;
  double detail_amplitude = 0.3;
  /// Std of the Gaussian envelope on details, as a fraction of the image side.
  double detail_spread = 0.18;
  /// Detail wave periods in pixels; components draw random orientations and phases.
  std::vector<double> detail_periods{2.0, 4.0};
  /// Geometric weights with w_max / w_min = weight_ratio (1 gives equal weights).
  double weight_ratio = 10.0;

  void validate() const;

  /// Details spread over most of the image; used for the cross-task bench
  /// and the weak-prior robustness runs.
  static WorldConfig bench();
  /// Details concentrated in the center, so a central box hides most of the
  /// differences between means; used for the failure-mode sweeps.
  static WorldConfig failure();
};

GaussianMixturePrior make_image_world(const WorldConfig& config, Rng& rng);

enum class Mismatch { Reverse, Rotate, Uniform };

std::string to_string(Mismatch m);
Mismatch mismatch_from_string(const std::string& name);

/// Same means and variances with reassigned weights: Reverse maps w_j to
/// w_{M-1-j}; Rotate to w_{(j+1) mod M}; Uniform sets all weights equal.
/// The weight ratio bound C is unchanged by Reverse and Rotate.
GaussianMixturePrior mismatch_weights(const GaussianMixturePrior& prior, Mismatch kind);

struct WorldDraw {
  Vector x;
  std::size_t component = 0;
};

/// x = mu_J + tau_J xi with J ~ w.
WorldDraw draw_from(const GaussianMixturePrior& prior, Rng& rng);

}  // namespace weakprior

#endif  // WEAKPRIOR_WORLDS_HPP
