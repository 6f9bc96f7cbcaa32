// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_SOLVER_HPP
#define WEAKPRIOR_SOLVER_HPP

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "weakprior/core.hpp"
#include "weakprior/ddim.hpp"
#include "weakprior/forward_ops.hpp"
#include "weakprior/sphere_opt.hpp"

namespace weakprior {

// ---- metrics ---------------------------------------------------------------

/// 10 log10(peak^2 / MSE); +inf for identical inputs.
double psnr(const Vector& x_hat, const Vector& x_ref, double peak = 2.0);
/// Mean SSIM over all 8x8 windows (stride 1) and channels, uniform window
/// weights, population moments, C1 = (0.01 peak)^2, C2 = (0.03 peak)^2.
/// Images smaller than 8 on a side use the full extent as the window.
double ssim(const Vector& x_hat, const Vector& x_ref, ImageShape shape, double peak = 2.0);
/// Peak is the reference grid's value-range width.
double ssim(const ImageGrid& x_hat, const ImageGrid& x_ref);

inline constexpr std::size_t kSsimWindow = 8;

/// Names accepted in metric lists.
const std::vector<std::string>& known_metrics();

struct MetricReference {
  Vector x_true;
  std::optional<ImageShape> shape;  // needed for "ssim"
  double peak = 2.0;
};

std::map<std::string, double> compute_metrics(const Vector& x_hat, const MetricReference& ref,
                                              const std::vector<std::string>& names);

// ---- latent optimization ---------------------------------------------------

/// Optional penalty R(x) added as weight * R(G(z)); returns R and writes dR/dx.
using Regularizer = std::function<double(const Vector& x, Vector& grad_x)>;

struct SolveConfig {
  AdamSphereConfig optimizer;
  HoldoutConfig holdout;
  std::size_t iterations = 1000;
  std::vector<std::string> metrics{"psnr", "ssim"};
  Regularizer regularizer;
  double regularizer_weight = 0.0;

  void validate() const;
};

struct TraceRow {
  std::size_t step = 0;
  double fit_mse = 0.0;
  double holdout_mse = 0.0;
  double z_norm = 0.0;
};

struct SolveResult {
  Vector x_hat;
  Vector z_hat;
  std::size_t selected_step = 0;
  std::vector<TraceRow> trace;
  std::map<std::string, double> metrics;
  double wall_seconds = 0.0;
};

/// Mean squared error of A G(z) against y on the fit positions of y, its
/// gradient in z, and the holdout MSE.
class LatentObjective {
 public:
  LatentObjective(const DdimGenerator& generator, const Observation& obs, std::vector<std::size_t> fit,
                  std::vector<std::size_t> holdout);

  struct Evaluation {
    Vector x;
    double fit_mse = 0.0;
    double holdout_mse = 0.0;
    double penalty = 0.0;
    Vector gradient;  // of fit_mse + weight * penalty; empty unless requested
  };

  Evaluation evaluate(const Vector& z, bool with_gradient) const;
  double fit_loss(const Vector& z) const;
  void set_regularizer(Regularizer r, double weight);

  std::size_t fit_size() const noexcept { return fit_.size(); }
  std::size_t holdout_size() const noexcept { return holdout_.size(); }

 private:
  const DdimGenerator& gen_;
  const Observation& obs_;
  std::vector<std::size_t> fit_;
  std::vector<std::size_t> holdout_;
  Regularizer reg_;
  double reg_weight_ = 0.0;
};

/// Initial-noise optimization: AdamSphere on the fit MSE with HoldoutTopK
/// selection. The holdout split is over the m positions of y, which for
/// masks are exactly the observed pixels.
SolveResult solve_latent(const DdimGenerator& generator, const Observation& obs, const SolveConfig& config, Rng& rng,
                         const MetricReference* reference = nullptr);

// ---- guided sampling baseline ----------------------------------------------

enum class GuidanceRule {
  Normalized,  // zeta_t = zeta / ||y - A x0_hat||
  Constant,    // zeta_t = zeta
};

std::string to_string(GuidanceRule r);
GuidanceRule guidance_rule_from_string(const std::string& name);

struct DpsConfig {
  /// Guidance step x <- x - zeta_t grad_x ||y - A x0_hat(x)||^2.
  double zeta = 1.0;
  GuidanceRule rule = GuidanceRule::Normalized;
  /// 0 is deterministic DDIM; 1 adds DDPM-strength noise between steps.
  double eta = 0.0;
  std::vector<std::string> metrics{"psnr", "ssim"};

  void validate() const;
};

/// Runs the generator's step schedule from z ~ N(0, I) (drawn like
/// sample_prior's first sample) and applies the guidance step after each
/// denoising update.
SolveResult dps_baseline(const DdimGenerator& generator, const Observation& obs, const DpsConfig& config, Rng& rng,
                         const MetricReference* reference = nullptr);

}  // namespace weakprior

#endif  // WEAKPRIOR_SOLVER_HPP
