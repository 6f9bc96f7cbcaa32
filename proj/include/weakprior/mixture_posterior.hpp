// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_MIXTURE_POSTERIOR_HPP
#define WEAKPRIOR_MIXTURE_POSTERIOR_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "weakprior/core.hpp"
#include "weakprior/forward_ops.hpp"

namespace weakprior {

/// pi(x) = sum_j w_j N(x; mu_j, tau_j^2 I_n).
class GaussianMixturePrior {
 public:
  /// Weights must be >= 0 and sum to 1 within 1e-12.
  GaussianMixturePrior(std::vector<double> weights, std::vector<Vec64> means, std::vector<double> tau2);
  /// Same as above with weights rescaled to sum to 1.
  static GaussianMixturePrior from_unnormalized(std::vector<double> weights, std::vector<Vec64> means,
                                                std::vector<double> tau2);
  /// Homogeneous variance shortcut.
  static GaussianMixturePrior homogeneous(std::vector<double> weights, std::vector<Vec64> means, double tau2);

  std::size_t components() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(means_.rows()); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& tau2() const noexcept { return tau2_; }
  double weight(std::size_t j) const { return weights_.at(j); }
  double log_weight(std::size_t j) const;
  double tau2(std::size_t j) const { return tau2_.at(j); }
  /// n x M matrix, column j is mu_j.
  const Matrix& mean_matrix() const noexcept { return means_; }
  Vector mean(std::size_t j) const { return means_.col(static_cast<Eigen::Index>(j)); }
  std::vector<Vec64> means() const;
  bool is_homogeneous() const noexcept;
  /// Number of components with positive weight.
  std::size_t active_components() const noexcept;
  /// C = max_{i,j} w_i / w_j over positive-weight components (1 when all equal).
  double weight_ratio_bound() const;

  GaussianMixturePrior with_weights(std::vector<double> weights) const;

 private:
  std::vector<double> weights_;
  Matrix means_;
  std::vector<double> tau2_;
};

struct ComponentScores {
  Vector s;       // 0.5 * ||Sigma_j^{-1/2} (y - A mu_j)||^2
  Vector ell;     // s_j + 0.5 log det Sigma_j
  Vector logdet;  // log det Sigma_j, Sigma_j = sigma^2 I + tau_j^2 A A^T
};

ComponentScores component_scores(const GaussianMixturePrior& prior, const Observation& obs);

struct GapResult {
  double delta = 0.0;  // (second-lowest - lowest) / m
  std::size_t winner = 0;
  std::size_t runner_up = 0;
  bool single_component = false;  // M == 1: delta = +inf
  bool identifiable = true;       // unique minimizer, gap above tie tolerance
};

/// Per-dimension gap of `scores`; lowest index wins ties. Entries flagged in
/// `exclude` (e.g. zero-weight components) are ignored.
GapResult per_dim_gap(const Vector& scores, std::size_t m, const std::vector<bool>& exclude = {});

/// Posterior component covariance: either dense, or a I + b A^T A with the
/// operator carried by the owning PosteriorMixture.
struct ComponentCovariance {
  double identity_scale = 0.0;
  double gram_scale = 0.0;
  std::optional<Matrix> dense;
};

struct PosteriorMixture {
  Vector log_weights;  // normalized: logsumexp == 0
  std::vector<Vector> means;
  std::vector<ComponentCovariance> covariances;
  std::optional<LinearOperator> op;  // for structured covariances
  std::size_t winner = 0;            // argmin of selection scores
  GapResult gap;                     // on selection scores
  Vector scores;                     // s_j
  Vector selection_scores;           // ell_j
  std::size_t m = 0;

  std::size_t components() const noexcept { return means.size(); }
  double weight(std::size_t j) const;
  Matrix covariance(std::size_t j) const;
  /// log density of the posterior mixture at x (dense covariances; small n).
  double log_density(const Vector& x) const;
};

PosteriorMixture exact_posterior(const GaussianMixturePrior& prior, const Observation& obs);

/// Component j of the posterior via the n x n information form
/// C = (tau^-2 I + sigma^-2 A^T A)^-1, m = C (tau^-2 mu + sigma^-2 A^T y).
struct GaussianComponent {
  Vector mean;
  Matrix covariance;
};
GaussianComponent information_form_component(const GaussianMixturePrior& prior, const Observation& obs,
                                             std::size_t j);

struct CollapseReport {
  double p_not_jstar = 0.0;
  double log_p_not_jstar = 0.0;
  double bound = 0.0;
  double log_bound = 0.0;
  double tv_to_winner = 0.0;  // certified: sum_{j != j*} posterior weights
  std::optional<double> grid_tv;
  double weight_ratio = 1.0;  // C
  double delta0 = 0.0;
  double delta = 0.0;  // observed gap on selection scores
  std::size_t winner = 0;
  std::size_t m = 0;
  std::size_t components = 0;  // M, positive-weight components
  bool assumption2_holds = true;
  bool bound_holds = true;
};

/// `with_grid_tv` adds the quadrature TV estimate (n <= 2 only).
CollapseReport collapse_report(const PosteriorMixture& posterior, const GaussianMixturePrior& prior,
                               std::optional<double> delta0 = std::nullopt, bool with_grid_tv = false);
CollapseReport collapse_report(const GaussianMixturePrior& prior, const Observation& obs,
                               std::optional<double> delta0 = std::nullopt, bool with_grid_tv = false);

/// TV(posterior, winning Gaussian) by tensor-grid quadrature; n <= 2 only.
double grid_tv_to_winner(const PosteriorMixture& posterior, std::size_t points_per_axis = 801,
                         double half_width_sds = 9.0);

/// Posterior given N i.i.d. observations y_i = A x + eps_i sharing A and
/// sigma, built from sufficient statistics (N, A^T sum y_i, sum ||y_i||^2).
PosteriorMixture posterior_for_iid_stack(const GaussianMixturePrior& prior, const LinearOperator& op,
                                         const std::vector<Vec64>& y_list, double sigma);

/// Two-route m-sweep of the collapse bound: each row pairs the measured
/// P(J != j*) with C M exp(-delta m).
struct CollapseSweepConfig {
  std::vector<std::size_t> m_values{8, 16, 32, 64, 128, 256, 512};
  double separation = 0.1;  // per-coordinate mean difference
  double sigma = 0.05;
  double tau = 0.05;
  std::size_t trials_per_m = 1;
};

struct CollapseSweepRow {
  std::size_t m = 0;
  double delta = 0.0;
  double p_not_jstar = 0.0;
  double log_p_not_jstar = 0.0;
  double bound = 0.0;
  double log_bound = 0.0;
};

struct CollapseSweepResult {
  std::vector<CollapseSweepRow> rows;
  double fitted_slope = 0.0;  // least squares of log p_not_jstar on m
  double mean_delta = 0.0;
};

CollapseSweepResult collapse_m_sweep(const CollapseSweepConfig& config, Rng& rng);

/// Ordinary least-squares slope of y on x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace weakprior

#endif  // WEAKPRIOR_MIXTURE_POSTERIOR_HPP
