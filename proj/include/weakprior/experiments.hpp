// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded experiment drivers shared by the CLI and the acceptance harness.

#ifndef WEAKPRIOR_EXPERIMENTS_HPP
#define WEAKPRIOR_EXPERIMENTS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "weakprior/solver.hpp"
#include "weakprior/worlds.hpp"

namespace weakprior {

/// One measurement task on a world image.
struct TaskSpec {
  std::string kind = "inpaint";  // inpaint | box | sr | blur
  /// inpaint: keep fraction; box: box fraction; sr: per-axis factor; blur: kernel std in pixels.
  double param = 0.3;
  std::size_t kernel_size = 9;  // blur only

  std::string label() const;
  void validate() const;
};

LinearOperator make_task_operator(const TaskSpec& task, ImageShape shape, Rng& rng);
/// Learning rate and holdout fraction per task family.
SolveConfig task_solve_config(const TaskSpec& task);

struct WorldRunConfig {
  WorldConfig world = WorldConfig::bench();
  std::size_t worlds = 20;
  std::uint64_t seed = 1;
  double sigma = 0.01;
  std::size_t generator_steps = 3;
  Mismatch mismatch = Mismatch::Reverse;
  std::size_t iterations = 1000;
  std::size_t threads = 1;
};

/// Matched versus mismatched generator on one world and task.
struct PairOutcome {
  std::size_t world = 0;
  std::size_t true_component = 0;
  std::size_t posterior_winner = 0;
  std::size_t m = 0;
  double delta = 0.0;          // per-scalar selection-score gap under the matched prior
  double log_cm = 0.0;         // log(C M) of the matched prior
  std::size_t mode_matched = 0;     // nearest mean to x_hat
  std::size_t mode_mismatched = 0;
  double psnr_matched = 0.0;
  double psnr_mismatched = 0.0;
  double ssim_matched = 0.0;
  double ssim_mismatched = 0.0;
};

PairOutcome run_pair(const GaussianMixturePrior& world, const Vector& x_true, std::size_t true_component,
                     const TaskSpec& task, const WorldRunConfig& config, Rng& rng);

// ---- weak-prior robustness ------------------------------------------------

struct RobustnessResult {
  std::vector<PairOutcome> rows;  // worlds meeting the identifiability margin
  std::size_t rejected = 0;       // worlds drawn but below the margin
  double agreement = 0.0;         // fraction with mode_matched == mode_mismatched
  double median_abs_psnr_diff = 0.0;
  double median_psnr_matched = 0.0;
  double median_psnr_mismatched = 0.0;
};

/// Inpainting at keep 0.3 over `config.worlds` worlds with delta m >= log(CM) + margin.
RobustnessResult robustness_experiment(const WorldRunConfig& config, double margin = 5.0,
                                       const TaskSpec& task = TaskSpec{});

// ---- failure modes --------------------------------------------------------

struct SweepRow {
  TaskSpec task;
  std::size_t m = 0;
  double mean_delta = 0.0;
  double mean_psnr_matched = 0.0;
  double mean_psnr_mismatched = 0.0;
  double mean_gap = 0.0;  // matched - mismatched
  double se_gap = 0.0;
  double agreement = 0.0;
};

struct FailureSweepConfig {
  WorldRunConfig run;
  std::vector<double> box_fractions{0.3, 0.4, 0.5, 0.6};
  std::vector<std::size_t> sr_factors{2, 4};

  static FailureSweepConfig defaults();
};

struct FailureSweepResult {
  std::vector<SweepRow> box;
  std::vector<SweepRow> sr;
  double spearman_box_gap = 0.0;  // rank correlation of box fraction and PSNR gap
};

/// Every world image is reused across all fractions and factors.
FailureSweepResult failure_sweep(const FailureSweepConfig& config);

double spearman(const std::vector<double>& x, const std::vector<double>& y);

// ---- cross-task bench -----------------------------------------------------

struct BenchRow {
  std::string task;
  std::string prior;  // matched | mismatched | dps
  double psnr = 0.0;
  double ssim = 0.0;
  double psnr_se = 0.0;
};

struct BenchConfig {
  WorldRunConfig run;
  std::vector<TaskSpec> tasks;
  bool include_dps = true;
  DpsConfig dps;
  std::size_t dps_steps = 1000;

  static BenchConfig defaults();
};

std::vector<BenchRow> bench(const BenchConfig& config);

// ---- guided-sampling sanity ----------------------------------------------

struct DpsSanityConfig {
  std::size_t dim = 16;
  std::size_t worlds = 20;
  std::vector<std::size_t> steps{5, 20, 100};
  double tau = 0.1;
  double sigma = 0.01;
  DpsConfig dps;
  std::uint64_t seed = 1;

  static DpsSanityConfig defaults();
};

struct DpsSanityRow {
  std::size_t steps = 0;
  double mean_distance = 0.0;  // ||x_dps - posterior mean||, averaged over worlds
  double se = 0.0;
};

/// Single-Gaussian worlds observed through a dense random square A.
std::vector<DpsSanityRow> dps_sanity(const DpsSanityConfig& config);

}  // namespace weakprior

#endif  // WEAKPRIOR_EXPERIMENTS_HPP
