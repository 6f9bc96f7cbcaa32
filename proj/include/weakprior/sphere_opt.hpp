// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_SPHERE_OPT_HPP
#define WEAKPRIOR_SPHERE_OPT_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "weakprior/core.hpp"

namespace weakprior {

enum class Retraction { Normalize, ExpMap };

std::string to_string(Retraction r);
Retraction retraction_from_string(const std::string& name);

struct AdamSphereConfig {
  double learning_rate = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Sphere radius; unset means ||z_0||.
  std::optional<double> radius;
  Retraction retraction = Retraction::Normalize;

  void validate() const;
};

struct SphereRunState {
  Vector z;
  Vector first_moment;
  Vector second_moment;
  double radius = 0.0;
  std::size_t step = 0;
  std::size_t halvings = 0;  // learning-rate halvings after a zero candidate
  std::vector<double> loss_history;
};

/// Places z0 on the sphere (radius from config, or ||z0||) with zero moments.
SphereRunState init_sphere_state(const Vector& z0, const AdamSphereConfig& config);

/// g - (<g, z> / r^2) z.
Vector tangent_project(const Vector& z, const Vector& g, double r);

/// One AdamSphere update with Euclidean gradient `gradient` at state.z.
void adam_sphere_step_inplace(SphereRunState& state, const AdamSphereConfig& config, const Vector& gradient);
SphereRunState adam_sphere_step(SphereRunState state, const AdamSphereConfig& config, const Vector& gradient);

/// Unconstrained Adam, for comparisons.
struct AdamState {
  Vector x;
  Vector first_moment;
  Vector second_moment;
  std::size_t step = 0;
};
AdamState init_adam_state(const Vector& x0);
void adam_step_inplace(AdamState& state, const AdamSphereConfig& config, const Vector& gradient);

struct HoldoutConfig {
  double fraction = 0.1;  // share of observed scalars held out
  std::size_t k = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct HoldoutSplit {
  std::vector<std::size_t> fit;      // positions into Omega, increasing
  std::vector<std::size_t> holdout;  // positions into Omega, increasing
};

/// Splits positions 0..omega_size-1; |holdout| = round(fraction * omega_size).
HoldoutSplit holdout_split(std::size_t omega_size, const HoldoutConfig& config, Rng& rng);
/// Same, seeded from config.seed.
HoldoutSplit holdout_split(std::size_t omega_size, const HoldoutConfig& config);

struct TopKEntry {
  double score = 0.0;
  std::size_t step = 0;
  Vector z;
};

/// The K lowest scores seen, sorted ascending; among equal scores the
/// earlier entry ranks first.
class TopKBuffer {
 public:
  explicit TopKBuffer(std::size_t capacity);
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<TopKEntry>& entries() const noexcept { return entries_; }
  /// Inserts when not full, or when score is strictly below the current K-th best.
  bool update(double score, std::size_t step, const Vector& z);
  /// Entry with the largest step among those kept.
  const TopKEntry& select() const;
  /// Would `score` be inserted?
  bool accepts(double score) const noexcept;

 private:
  std::size_t capacity_;
  std::vector<TopKEntry> entries_;
};

TopKBuffer topk_update(TopKBuffer buffer, double score, std::size_t step, const Vector& z);
const TopKEntry& topk_select(const TopKBuffer& buffer);

}  // namespace weakprior

#endif  // WEAKPRIOR_SPHERE_OPT_HPP
