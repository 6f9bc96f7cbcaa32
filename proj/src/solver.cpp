// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <utility>

namespace weakprior {

namespace {

void check_metric_names(const std::vector<std::string>& names) {
  const auto& known = known_metrics();
  for (const auto& n : names) {
    if (std::find(known.begin(), known.end(), n) == known.end()) {
      throw InvalidArgument("unknown metric \"" + n + "\" (valid: psnr, ssim, mse)");
    }
  }
}

void check_problem(const DdimGenerator& gen, const Observation& obs) {
  if (obs.op.input_dim() != gen.dim()) {
    throw InvalidArgument("operator input dimension " + std::to_string(obs.op.input_dim()) +
                          " does not match generator dimension " + std::to_string(gen.dim()));
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void SolveConfig::validate() const {
  optimizer.validate();
  holdout.validate();
  if (iterations == 0) throw InvalidArgument("solve: iterations must be >= 1");
  if (!(regularizer_weight >= 0.0)) throw InvalidArgument("solve: regularizer weight must be >= 0");
  check_metric_names(metrics);
}

std::string to_string(GuidanceRule r) { return r == GuidanceRule::Normalized ? "normalized" : "constant"; }

GuidanceRule guidance_rule_from_string(const std::string& name) {
  if (name == "normalized") return GuidanceRule::Normalized;
  if (name == "constant") return GuidanceRule::Constant;
  throw InvalidArgument("unknown guidance rule \"" + name + "\" (valid: normalized, constant)");
}

void DpsConfig::validate() const {
  if (!(zeta >= 0.0) || !std::isfinite(zeta)) throw InvalidArgument("dps: zeta must be finite and >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("dps: eta must lie in [0, 1]");
  check_metric_names(metrics);
}

LatentObjective::LatentObjective(const DdimGenerator& generator, const Observation& obs,
                                 std::vector<std::size_t> fit, std::vector<std::size_t> holdout)
    : gen_(generator), obs_(obs), fit_(std::move(fit)), holdout_(std::move(holdout)) {
  check_problem(gen_, obs_);
  if (fit_.empty()) throw InvalidArgument("LatentObjective: empty fit set");
  for (auto i : fit_) {
    if (i >= obs_.m()) throw InvalidArgument("LatentObjective: fit position out of range");
  }
  for (auto i : holdout_) {
    if (i >= obs_.m()) throw InvalidArgument("LatentObjective: holdout position out of range");
  }
}

void LatentObjective::set_regularizer(Regularizer r, double weight) {
  reg_ = std::move(r);
  reg_weight_ = weight;
}

LatentObjective::Evaluation LatentObjective::evaluate(const Vector& z, bool with_gradient) const {
  Evaluation ev;
  DdimGenerator::Tape tape;
  if (with_gradient) {
    tape = gen_.forward(z);
    ev.x = tape.x;
  } else {
    ev.x = gen_.generate(z);
  }
  const Vector res = obs_.op.apply(ev.x) - obs_.y.values();
  double fit = 0.0, ho = 0.0;
  Vector cot_y = Vector::Zero(res.size());
  const double scale = 2.0 / static_cast<double>(fit_.size());
  for (auto i : fit_) {
    const double r = res[static_cast<Eigen::Index>(i)];
    fit += r * r;
    cot_y[static_cast<Eigen::Index>(i)] = scale * r;
  }
  for (auto i : holdout_) {
    const double r = res[static_cast<Eigen::Index>(i)];
    ho += r * r;
  }
  ev.fit_mse = fit / static_cast<double>(fit_.size());
  ev.holdout_mse = holdout_.empty() ? 0.0 : ho / static_cast<double>(holdout_.size());
  Vector cot_x;
  if (with_gradient) cot_x = obs_.op.adjoint(cot_y);
  if (reg_ && reg_weight_ > 0.0) {
    Vector gx = Vector::Zero(ev.x.size());
    ev.penalty = reg_(ev.x, gx);
    if (with_gradient) cot_x += reg_weight_ * gx;
  }
  if (with_gradient) ev.gradient = gen_.pullback(tape, cot_x);
  return ev;
}

double LatentObjective::fit_loss(const Vector& z) const {
  const Evaluation ev = evaluate(z, false);
  return ev.fit_mse + reg_weight_ * ev.penalty;
}

SolveResult solve_latent(const DdimGenerator& generator, const Observation& obs, const SolveConfig& config, Rng& rng,
                         const MetricReference* reference) {
  config.validate();
  check_problem(generator, obs);
  const auto t0 = std::chrono::steady_clock::now();
  Rng split_rng = rng.split(0x5eed);
  const HoldoutSplit split = holdout_split(obs.m(), config.holdout, split_rng);
  LatentObjective objective(generator, obs, split.fit, split.holdout);
  objective.set_regularizer(config.regularizer, config.regularizer_weight);

  AdamSphereConfig opt = config.optimizer;
  if (!opt.radius) opt.radius = std::sqrt(static_cast<double>(generator.dim()));
  SphereRunState state = init_sphere_state(gaussian_eigen(rng, generator.dim()), opt);
  TopKBuffer topk(config.holdout.k);
  SolveResult result;
  result.trace.reserve(config.iterations + 1);

  for (std::size_t t = 0; t <= config.iterations; ++t) {
    const bool last = t == config.iterations;
    const auto ev = objective.evaluate(state.z, !last);
    const double loss = ev.fit_mse + config.regularizer_weight * ev.penalty;
    if (!std::isfinite(loss) || !std::isfinite(ev.holdout_mse) || (!last && !ev.gradient.allFinite())) {
      std::ostringstream msg;
      msg << "solve_latent: non-finite loss at step " << t << " (||z|| = " << state.z.norm() << ", loss = " << loss
          << ")";
      throw NumericalFailure(msg.str());
    }
    result.trace.push_back({t, ev.fit_mse, ev.holdout_mse, state.z.norm()});
    state.loss_history.push_back(loss);
    topk.update(ev.holdout_mse, t, state.z);
    if (!last) adam_sphere_step_inplace(state, opt, ev.gradient);
  }

  const TopKEntry& chosen = topk.select();
  result.selected_step = chosen.step;
  result.z_hat = chosen.z;
  result.x_hat = generator.generate(chosen.z);
  if (reference) result.metrics = compute_metrics(result.x_hat, *reference, config.metrics);
  result.wall_seconds = seconds_since(t0);
  return result;
}

SolveResult dps_baseline(const DdimGenerator& generator, const Observation& obs, const DpsConfig& config, Rng& rng,
                         const MetricReference* reference) {
  config.validate();
  check_problem(generator, obs);
  const auto t0 = std::chrono::steady_clock::now();
  const Rng base(rng.next_u64());
  Rng child = base.split(0);
  Vector x = gaussian_eigen(child, generator.dim());
  Rng noise = base.split(1);
  const Vector& y = obs.y.values();
  const auto& steps = generator.steps();
  SolveResult result;

  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double ab = generator.schedule().alpha_bar(steps[i]);
    const ScoreTerms st = score_terms(generator.data_prior(), x, ab);
    const Vector res = y - obs.op.apply(st.denoised);
    const double rn = res.norm();
    if (!std::isfinite(rn)) {
      std::ostringstream msg;
      msg << "dps_baseline: non-finite residual at step " << i << " (||x|| = " << x.norm() << ")";
      throw NumericalFailure(msg.str());
    }
    const bool last = i + 1 == steps.size();
    Vector next;
    if (last) {
      next = st.denoised;
    } else if (config.eta == 0.0) {
      const auto c = generator.step_coefficients(i);
      next = c.from_x0 * st.denoised + c.from_x * x;
    } else {
      const double ab_next = generator.schedule().alpha_bar(steps[i + 1]);
      const double sig = config.eta * std::sqrt((1.0 - ab_next) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_next);
      const Vector eps_hat = (x - std::sqrt(ab) * st.denoised) / std::sqrt(1.0 - ab);
      next = std::sqrt(ab_next) * st.denoised + std::sqrt(std::max(0.0, 1.0 - ab_next - sig * sig)) * eps_hat +
             sig * gaussian_eigen(noise, generator.dim());
    }
    if (config.zeta > 0.0 && rn > 0.0) {
      // grad_x ||y - A x0_hat(x)||^2 = -2 J^T A^T r, with J symmetric.
      const Vector grad = -2.0 * denoise_jvp(st, obs.op.adjoint(res));
      next -= (config.rule == GuidanceRule::Normalized ? config.zeta / rn : config.zeta) * grad;
    }
    x = std::move(next);
    result.trace.push_back({i, res.squaredNorm() / static_cast<double>(res.size()), 0.0, x.norm()});
  }
  result.selected_step = steps.size() - 1;
  result.x_hat = x;
  if (reference) result.metrics = compute_metrics(result.x_hat, *reference, config.metrics);
  result.wall_seconds = seconds_since(t0);
  return result;
}

}  // namespace weakprior
