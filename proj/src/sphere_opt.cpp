// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/sphere_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace weakprior {

std::string to_string(Retraction r) { return r == Retraction::Normalize ? "normalize" : "expmap"; }

Retraction retraction_from_string(const std::string& name) {
  if (name == "normalize") return Retraction::Normalize;
  if (name == "expmap" || name == "exp_map") return Retraction::ExpMap;
  throw InvalidArgument("unknown retraction \"" + name + "\" (valid: normalize, expmap)");
}

void AdamSphereConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("AdamSphere: lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("AdamSphere: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("AdamSphere: beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("AdamSphere: epsilon must be > 0");
  if (radius && !(*radius > 0.0 && std::isfinite(*radius))) throw InvalidArgument("AdamSphere: radius must be > 0");
}

SphereRunState init_sphere_state(const Vector& z0, const AdamSphereConfig& config) {
  config.validate();
  const double norm = z0.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("init_sphere_state: z0 must be finite and nonzero");
  SphereRunState s;
  s.radius = config.radius.value_or(norm);
  s.z = (s.radius / norm) * z0;
  s.first_moment = Vector::Zero(z0.size());
  s.second_moment = Vector::Zero(z0.size());
  return s;
}

Vector tangent_project(const Vector& z, const Vector& g, double r) {
  if (!(r > 0.0)) throw InvalidArgument("tangent_project: radius must be > 0");
  if (z.size() != g.size()) throw InvalidArgument("tangent_project: dimension mismatch");
  return g - (g.dot(z) / (r * r)) * z;
}

void adam_sphere_step_inplace(SphereRunState& state, const AdamSphereConfig& config, const Vector& gradient) {
  if (gradient.size() != state.z.size()) throw InvalidArgument("adam_sphere_step: gradient dimension mismatch");
  if (!gradient.allFinite()) throw InvalidArgument("adam_sphere_step: non-finite gradient");
  const double r = state.radius;
  const Vector g = tangent_project(state.z, gradient, r);
  state.step += 1;
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * g;
  state.second_moment = config.beta2 * state.second_moment + (1.0 - config.beta2) * g.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const Vector d = (state.first_moment / c1).array() / ((state.second_moment / c2).array().sqrt() + config.epsilon);
  const Vector dh = tangent_project(state.z, d, r);
  const double dn = dh.norm();
  if (dn == 0.0) return;
  double lr = config.learning_rate;
  if (config.retraction == Retraction::ExpMap) {
    const double theta = lr * dn / r;
    state.z = std::cos(theta) * state.z - r * std::sin(theta) * (dh / dn);
    return;
  }
  for (;;) {
    const Vector cand = state.z - lr * dh;
    const double cn = cand.norm();
    if (cn > 0.0) {
      state.z = (r / cn) * cand;
      return;
    }
    lr *= 0.5;
    state.halvings += 1;
  }
}

SphereRunState adam_sphere_step(SphereRunState state, const AdamSphereConfig& config, const Vector& gradient) {
  adam_sphere_step_inplace(state, config, gradient);
  return state;
}

AdamState init_adam_state(const Vector& x0) {
  return AdamState{x0, Vector::Zero(x0.size()), Vector::Zero(x0.size()), 0};
}

void adam_step_inplace(AdamState& state, const AdamSphereConfig& config, const Vector& gradient) {
  if (gradient.size() != state.x.size()) throw InvalidArgument("adam_step: gradient dimension mismatch");
  state.step += 1;
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * gradient;
  state.second_moment = config.beta2 * state.second_moment + (1.0 - config.beta2) * gradient.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const Vector d = (state.first_moment / c1).array() / ((state.second_moment / c2).array().sqrt() + config.epsilon);
  state.x -= config.learning_rate * d;
}

void HoldoutConfig::validate() const {
  if (!(fraction > 0.0 && fraction <= 0.5)) throw InvalidArgument("holdout: fraction must lie in (0, 0.5]");
  if (k == 0) throw InvalidArgument("holdout: k must be >= 1");
}

HoldoutSplit holdout_split(std::size_t omega_size, const HoldoutConfig& config, Rng& rng) {
  config.validate();
  if (omega_size < 2) throw InvalidArgument("holdout_split: need at least two observed scalars");
  const auto ho = static_cast<std::size_t>(std::llround(config.fraction * static_cast<double>(omega_size)));
  if (ho == 0) {
    throw InvalidArgument("holdout_split: fraction " + std::to_string(config.fraction) + " of " +
                          std::to_string(omega_size) + " scalars gives an empty holdout set");
  }
  std::vector<std::size_t> perm(omega_size);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < ho; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(omega_size - i));
    std::swap(perm[i], perm[j]);
  }
  HoldoutSplit out;
  out.holdout.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(ho));
  out.fit.assign(perm.begin() + static_cast<std::ptrdiff_t>(ho), perm.end());
  std::sort(out.holdout.begin(), out.holdout.end());
  std::sort(out.fit.begin(), out.fit.end());
  return out;
}

HoldoutSplit holdout_split(std::size_t omega_size, const HoldoutConfig& config) {
  Rng rng(config.seed);
  return holdout_split(omega_size, config, rng);
}

TopKBuffer::TopKBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("TopKBuffer: capacity must be >= 1");
}

bool TopKBuffer::accepts(double score) const noexcept {
  return entries_.size() < capacity_ || score < entries_.back().score;
}

bool TopKBuffer::update(double score, std::size_t step, const Vector& z) {
  if (!accepts(score)) return false;
  // After any equal scores, so earlier entries rank first.
  const auto pos = std::upper_bound(entries_.begin(), entries_.end(), score,
                                    [](double s, const TopKEntry& e) { return s < e.score; });
  entries_.insert(pos, TopKEntry{score, step, z});
  if (entries_.size() > capacity_) entries_.pop_back();
  return true;
}

const TopKEntry& TopKBuffer::select() const {
  if (entries_.empty()) throw InvalidState("TopKBuffer::select: buffer is empty");
  return *std::max_element(entries_.begin(), entries_.end(),
                           [](const TopKEntry& a, const TopKEntry& b) { return a.step < b.step; });
}

TopKBuffer topk_update(TopKBuffer buffer, double score, std::size_t step, const Vector& z) {
  buffer.update(score, step, z);
  return buffer;
}

const TopKEntry& topk_select(const TopKBuffer& buffer) { return buffer.select(); }

}  // namespace weakprior
