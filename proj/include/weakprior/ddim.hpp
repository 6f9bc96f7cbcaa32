// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_DDIM_HPP
#define WEAKPRIOR_DDIM_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "weakprior/core.hpp"
#include "weakprior/mixture_posterior.hpp"

namespace weakprior {

/// Cumulative signal levels alpha_bar_t for t = 0..T, alpha_bar_0 = 1.
class NoiseSchedule {
 public:
  /// beta_t linear from beta_start to beta_end over t = 1..T.
  static NoiseSchedule linear(std::size_t steps = 1000, double beta_start = 1e-4, double beta_end = 2e-2);
  /// alpha_bar[0] must be 1 and the sequence strictly decreasing in (0, 1].
  static NoiseSchedule from_alpha_bar(std::vector<double> alpha_bar, std::string rule = "custom");

  std::size_t steps() const noexcept { return alpha_bar_.size() - 1; }
  double alpha_bar(std::size_t t) const;
  const std::string& rule() const noexcept { return rule_; }
  /// t_i = round(T - i (T - 1) / (k - 1)), i = 0..k-1; k = 1 gives {T}.
  std::vector<std::size_t> inference_steps(std::size_t k) const;

 private:
  NoiseSchedule(std::vector<double> alpha_bar, std::string rule);
  std::vector<double> alpha_bar_;
  std::string rule_;
};

/// Quantities of the noised mixture p_t(x) = sum_j w_j N(x; sqrt(ab) mu_j, v_j I),
/// v_j = ab tau_j^2 + 1 - ab, at one point x.
struct ScoreTerms {
  double alpha_bar = 1.0;
  Vector responsibilities;  // r_j; zero for zero-weight components
  Vector variances;         // v_j
  Matrix centered;          // column j: u_j - s, u_j = (sqrt(ab) mu_j - x) / v_j
  Vector score;             // s = sum_j r_j u_j
  Vector denoised;          // Tweedie x0_hat = (x + (1 - ab) s) / sqrt(ab)
  double curvature = 0.0;   // sum_j r_j / v_j
  double shrink = 0.0;      // sum_j r_j sqrt(ab) tau_j^2 / v_j
};

ScoreTerms score_terms(const GaussianMixturePrior& prior, const Vector& x, double alpha_bar);
Vector analytic_score(const GaussianMixturePrior& prior, const Vector& x, double alpha_bar);
double log_marginal(const GaussianMixturePrior& prior, const Vector& x, double alpha_bar);
/// (d score / dx) c. The Jacobian is symmetric:
/// -(sum_j r_j / v_j) I + sum_j r_j (u_j - s)(u_j - s)^T.
Vector score_jvp(const ScoreTerms& terms, const Vector& c);
/// (d x0_hat / dx) c, symmetric.
Vector denoise_jvp(const ScoreTerms& terms, const Vector& c);

/// Deterministic k-step DDIM sampler G whose denoiser is the analytic score
/// of `data_prior`. G maps x_{t_1} = z through k - 1 DDIM updates and
/// returns the Tweedie estimate at t_k.
class DdimGenerator {
 public:
  DdimGenerator(NoiseSchedule schedule, GaussianMixturePrior data_prior, std::size_t k);

  const NoiseSchedule& schedule() const noexcept { return schedule_; }
  const GaussianMixturePrior& data_prior() const noexcept { return prior_; }
  std::size_t k() const noexcept { return steps_.size(); }
  std::size_t dim() const noexcept { return prior_.dim(); }
  const std::vector<std::size_t>& steps() const noexcept { return steps_; }

  Vector score(const Vector& x, std::size_t t) const;
  Vector generate(const Vector& z) const;
  /// (dG/dz)^T cotangent via reverse composition over stored states.
  Vector generate_vjp(const Vector& z, const Vector& cotangent) const;
  /// G(z) and (dG/dz)^T cotangent from a single forward pass.
  Vector generate_with_vjp(const Vector& z, const Vector& cotangent, Vector& pulled_back) const;
  Vector generate_jvp(const Vector& z, const Vector& tangent) const;

  /// Forward pass that keeps per-step terms for later pullbacks.
  struct Tape {
    Vector x;
    std::vector<ScoreTerms> terms;
  };
  Tape forward(const Vector& z) const;
  /// (dG/dz)^T cotangent at the tape's z.
  Vector pullback(const Tape& tape, const Vector& cotangent) const;

  /// Update i maps x_{t_i} to from_x0 * x0_hat + from_x * x_{t_i}; the last
  /// update returns x0_hat.
  struct StepCoefficients {
    double from_x0;
    double from_x;
  };
  StepCoefficients step_coefficients(std::size_t i) const;
  /// G applied to i.i.d. standard normals; sample i uses rng child stream i.
  std::vector<Vector> sample_prior(Rng& rng, std::size_t count, std::size_t threads = 1) const;

 private:
  void check_dim(const Vector& v, const char* what) const;

  NoiseSchedule schedule_;
  GaussianMixturePrior prior_;
  std::vector<std::size_t> steps_;
};

Vector analytic_score(const DdimGenerator& gen, const Vector& x, std::size_t t);
Vector generate(const DdimGenerator& gen, const Vector& z);
Vector generate_vjp(const DdimGenerator& gen, const Vector& z, const Vector& cotangent);
std::vector<Vector> sample_prior(const DdimGenerator& gen, Rng& rng, std::size_t count);

/// Index of the mean nearest to x in Euclidean distance.
std::size_t nearest_mean(const GaussianMixturePrior& prior, const Vector& x);

}  // namespace weakprior

#endif  // WEAKPRIOR_DDIM_HPP
