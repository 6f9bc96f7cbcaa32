// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/ddim.hpp"

#include <cmath>
#include <utility>

#include "weakprior/numeric.hpp"
#include "weakprior/parallel.hpp"

namespace weakprior {

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar, std::string rule)
    : alpha_bar_(std::move(alpha_bar)), rule_(std::move(rule)) {}

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_start, double beta_end) {
  if (steps == 0) throw InvalidArgument("NoiseSchedule: T must be positive");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw InvalidArgument("NoiseSchedule: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> ab(steps + 1);
  ab[0] = 1.0;
  for (std::size_t t = 1; t <= steps; ++t) {
    const double beta = steps == 1 ? beta_start
                                   : beta_start + (beta_end - beta_start) * static_cast<double>(t - 1) /
                                                      static_cast<double>(steps - 1);
    ab[t] = ab[t - 1] * (1.0 - beta);
  }
  return NoiseSchedule(std::move(ab), "linear");
}

NoiseSchedule NoiseSchedule::from_alpha_bar(std::vector<double> alpha_bar, std::string rule) {
  if (alpha_bar.size() < 2) throw InvalidArgument("NoiseSchedule: need at least one step");
  if (alpha_bar[0] != 1.0) throw InvalidArgument("NoiseSchedule: alpha_bar[0] must be 1");
  for (std::size_t t = 1; t < alpha_bar.size(); ++t) {
    if (!(alpha_bar[t] > 0.0 && alpha_bar[t] < alpha_bar[t - 1])) {
      throw InvalidArgument("NoiseSchedule: alpha_bar must decrease strictly within (0, 1]");
    }
  }
  return NoiseSchedule(std::move(alpha_bar), std::move(rule));
}

double NoiseSchedule::alpha_bar(std::size_t t) const {
  if (t >= alpha_bar_.size()) throw InvalidArgument("NoiseSchedule: t = " + std::to_string(t) + " out of range");
  return alpha_bar_[t];
}

std::vector<std::size_t> NoiseSchedule::inference_steps(std::size_t k) const {
  const std::size_t big_t = steps();
  if (k == 0 || k > big_t) throw InvalidArgument("inference_steps: need 1 <= k <= T");
  if (k == 1) return {big_t};
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double t = static_cast<double>(big_t) -
                     static_cast<double>(i) * static_cast<double>(big_t - 1) / static_cast<double>(k - 1);
    out[i] = static_cast<std::size_t>(std::llround(t));
  }
  return out;
}

// ---------------------------------------------------------------------------

ScoreTerms score_terms(const GaussianMixturePrior& prior, const Vector& x, double alpha_bar) {
  if (static_cast<std::size_t>(x.size()) != prior.dim()) throw InvalidArgument("score: dimension mismatch");
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) throw InvalidArgument("score: alpha_bar must lie in (0, 1]");
  const std::size_t mc = prior.components();
  const auto mi = static_cast<Eigen::Index>(mc);
  const double sa = std::sqrt(alpha_bar);
  const double n = static_cast<double>(prior.dim());
  ScoreTerms st;
  st.alpha_bar = alpha_bar;
  st.variances.resize(mi);
  st.responsibilities.resize(mi);
  for (std::size_t j = 0; j < mc; ++j) {
    const auto ji = static_cast<Eigen::Index>(j);
    const double v = alpha_bar * prior.tau2(j) + (1.0 - alpha_bar);
    st.variances[ji] = v;
    const double lw = prior.log_weight(j);
    st.responsibilities[ji] =
        lw == -kInf ? -kInf : lw - 0.5 * n * std::log(v) - (x - sa * prior.mean_matrix().col(ji)).squaredNorm() / (2.0 * v);
  }
  normalize_log_weights(st.responsibilities);
  st.responsibilities = st.responsibilities.array().exp().matrix();

  const Vector& r = st.responsibilities;
  const Vector inv_v = st.variances.cwiseInverse();
  st.curvature = r.dot(inv_v);
  // sum_i r_i mu_i / v_i
  const Vector mu_bar = prior.mean_matrix() * r.cwiseProduct(inv_v);
  st.score = sa * mu_bar - st.curvature * x;
  st.centered.resize(x.size(), mi);
  st.denoised = Vector::Zero(x.size());
  st.shrink = 0.0;
  for (std::size_t j = 0; j < mc; ++j) {
    const auto ji = static_cast<Eigen::Index>(j);
    const auto mu = prior.mean_matrix().col(ji);
    st.centered.col(ji) = sa * (mu * inv_v[ji] - mu_bar) - (inv_v[ji] - st.curvature) * x;
    if (r[ji] == 0.0) continue;
    const double sh = sa * prior.tau2(j) * inv_v[ji];
    st.denoised += r[ji] * ((1.0 - alpha_bar) * inv_v[ji] * mu + sh * x);
    st.shrink += r[ji] * sh;
  }
  return st;
}

Vector analytic_score(const GaussianMixturePrior& prior, const Vector& x, double alpha_bar) {
  return score_terms(prior, x, alpha_bar).score;
}

double log_marginal(const GaussianMixturePrior& prior, const Vector& x, double alpha_bar) {
  const double sa = std::sqrt(alpha_bar);
  const double n = static_cast<double>(prior.dim());
  std::vector<double> terms;
  for (std::size_t j = 0; j < prior.components(); ++j) {
    const double v = alpha_bar * prior.tau2(j) + (1.0 - alpha_bar);
    terms.push_back(prior.log_weight(j) - 0.5 * n * (kLog2Pi + std::log(v)) -
                    (x - sa * prior.mean(j)).squaredNorm() / (2.0 * v));
  }
  return log_sum_exp(terms);
}

namespace {

// sum_j r_j d_j (d_j . c)
Vector rank_term(const ScoreTerms& t, const Vector& c) {
  const Vector proj = t.centered.transpose() * c;
  return t.centered * t.responsibilities.cwiseProduct(proj);
}

}  // namespace

Vector score_jvp(const ScoreTerms& terms, const Vector& c) { return rank_term(terms, c) - terms.curvature * c; }

Vector denoise_jvp(const ScoreTerms& terms, const Vector& c) {
  const double ab = terms.alpha_bar;
  return terms.shrink * c + ((1.0 - ab) / std::sqrt(ab)) * rank_term(terms, c);
}

// ---------------------------------------------------------------------------

DdimGenerator::DdimGenerator(NoiseSchedule schedule, GaussianMixturePrior data_prior, std::size_t k)
    : schedule_(std::move(schedule)), prior_(std::move(data_prior)), steps_(schedule_.inference_steps(k)) {}

DdimGenerator::StepCoefficients DdimGenerator::step_coefficients(std::size_t i) const {
  if (i + 1 == steps_.size()) return {1.0, 0.0};
  const double ab = schedule_.alpha_bar(steps_[i]);
  const double ab_next = schedule_.alpha_bar(steps_[i + 1]);
  // x' = sqrt(ab') x0 + sqrt(1 - ab') eps,  eps = (x - sqrt(ab) x0) / sqrt(1 - ab)
  const double q = std::sqrt(1.0 - ab_next) / std::sqrt(1.0 - ab);
  return {std::sqrt(ab_next) - q * std::sqrt(ab), q};
}

void DdimGenerator::check_dim(const Vector& v, const char* what) const {
  if (static_cast<std::size_t>(v.size()) != dim()) {
    throw InvalidArgument(std::string(what) + ": expected length " + std::to_string(dim()) + ", got " +
                          std::to_string(v.size()));
  }
}

Vector DdimGenerator::score(const Vector& x, std::size_t t) const {
  check_dim(x, "score");
  return analytic_score(prior_, x, schedule_.alpha_bar(t));
}

Vector DdimGenerator::generate(const Vector& z) const {
  check_dim(z, "generate");
  Vector x = z;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const ScoreTerms st = score_terms(prior_, x, schedule_.alpha_bar(steps_[i]));
    const StepCoefficients c = step_coefficients(i);
    x = c.from_x0 * st.denoised + c.from_x * x;
  }
  return x;
}

DdimGenerator::Tape DdimGenerator::forward(const Vector& z) const {
  check_dim(z, "generate");
  Tape tape;
  tape.terms.reserve(steps_.size());
  tape.x = z;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    tape.terms.push_back(score_terms(prior_, tape.x, schedule_.alpha_bar(steps_[i])));
    const StepCoefficients c = step_coefficients(i);
    tape.x = c.from_x0 * tape.terms.back().denoised + c.from_x * tape.x;
  }
  return tape;
}

Vector DdimGenerator::pullback(const Tape& tape, const Vector& cotangent) const {
  check_dim(cotangent, "generate_vjp cotangent");
  if (tape.terms.size() != steps_.size()) throw InvalidArgument("pullback: tape does not match this generator");
  // Each step Jacobian a I + b dx0/dx is symmetric, so the pullback reuses the JVP form.
  Vector g = cotangent;
  for (std::size_t i = steps_.size(); i-- > 0;) {
    const StepCoefficients c = step_coefficients(i);
    g = c.from_x0 * denoise_jvp(tape.terms[i], g) + c.from_x * g;
  }
  return g;
}

Vector DdimGenerator::generate_with_vjp(const Vector& z, const Vector& cotangent, Vector& pulled_back) const {
  check_dim(cotangent, "generate_vjp cotangent");
  Tape tape = forward(z);
  pulled_back = pullback(tape, cotangent);
  return std::move(tape.x);
}

Vector DdimGenerator::generate_vjp(const Vector& z, const Vector& cotangent) const {
  Vector out;
  generate_with_vjp(z, cotangent, out);
  return out;
}

Vector DdimGenerator::generate_jvp(const Vector& z, const Vector& tangent) const {
  check_dim(z, "generate_jvp");
  check_dim(tangent, "generate_jvp tangent");
  Vector x = z, dx = tangent;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const ScoreTerms st = score_terms(prior_, x, schedule_.alpha_bar(steps_[i]));
    const StepCoefficients c = step_coefficients(i);
    dx = c.from_x0 * denoise_jvp(st, dx) + c.from_x * dx;
    x = c.from_x0 * st.denoised + c.from_x * x;
  }
  return dx;
}

std::vector<Vector> DdimGenerator::sample_prior(Rng& rng, std::size_t count, std::size_t threads) const {
  if (count == 0) throw InvalidArgument("sample_prior: count must be positive");
  const Rng base(rng.next_u64());
  std::vector<Vector> out(count);
  parallel_for(count, threads, [&](std::size_t i) {
    Rng child = base.split(i);
    out[i] = generate(gaussian_eigen(child, dim()));
  });
  return out;
}

Vector analytic_score(const DdimGenerator& gen, const Vector& x, std::size_t t) { return gen.score(x, t); }
Vector generate(const DdimGenerator& gen, const Vector& z) { return gen.generate(z); }
Vector generate_vjp(const DdimGenerator& gen, const Vector& z, const Vector& cotangent) {
  return gen.generate_vjp(z, cotangent);
}
std::vector<Vector> sample_prior(const DdimGenerator& gen, Rng& rng, std::size_t count) {
  return gen.sample_prior(rng, count);
}

std::size_t nearest_mean(const GaussianMixturePrior& prior, const Vector& x) {
  Eigen::Index best = 0;
  (prior.mean_matrix().colwise() - x).colwise().squaredNorm().minCoeff(&best);
  return static_cast<std::size_t>(best);
}

}  // namespace weakprior
