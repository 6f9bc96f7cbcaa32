// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "weakprior/ddim.hpp"

using namespace weakprior;

namespace {

GaussianMixturePrior separated_world(Rng& rng, std::size_t n, std::size_t mc, double spread, double tau) {
  std::vector<double> w;
  std::vector<Vec64> means;
  for (std::size_t j = 0; j < mc; ++j) {
    w.push_back(1.0 + static_cast<double>(j));
    Vector mu(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = spread * (2.0 * rng.uniform() - 1.0);
    means.emplace_back(mu);
  }
  return GaussianMixturePrior::from_unnormalized(w, means, std::vector<double>(mc, tau * tau));
}

Vector fd_gradient_of_contraction(const DdimGenerator& g, const Vector& z, const Vector& c, double h) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Vector zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    out[i] = (c.dot(g.generate(zp)) - c.dot(g.generate(zm))) / (2.0 * h);
  }
  return out;
}

double mean_nearest_distance(const GaussianMixturePrior& p, const std::vector<Vector>& xs, double* se) {
  double sum = 0.0, sq = 0.0;
  for (const auto& x : xs) {
    const double d = (p.mean(nearest_mean(p, x)) - x).norm();
    sum += d;
    sq += d * d;
  }
  const double n = static_cast<double>(xs.size());
  const double mean = sum / n;
  *se = std::sqrt(std::max(0.0, sq / n - mean * mean) / n);
  return mean;
}

}  // namespace

TEST_CASE("linear schedule and inference steps") {
  const auto s = NoiseSchedule::linear();
  CHECK(s.steps() == 1000);
  CHECK(s.alpha_bar(0) == 1.0);
  CHECK(s.alpha_bar(1) == doctest::Approx(1.0 - 1e-4));
  for (std::size_t t = 1; t <= 1000; ++t) REQUIRE(s.alpha_bar(t) < s.alpha_bar(t - 1));
  CHECK(s.alpha_bar(1000) < 1e-4);
  CHECK(s.inference_steps(1) == std::vector<std::size_t>{1000});
  CHECK(s.inference_steps(2) == std::vector<std::size_t>{1000, 1});
  CHECK(s.inference_steps(3) == std::vector<std::size_t>{1000, 501, 1});
  const auto all = s.inference_steps(1000);
  for (std::size_t i = 0; i < 1000; ++i) REQUIRE(all[i] == 1000 - i);
  CHECK_THROWS_AS(s.inference_steps(0), InvalidArgument);
  CHECK_THROWS_AS(NoiseSchedule::from_alpha_bar({1.0, 0.5, 0.6}), InvalidArgument);
}

TEST_CASE("single-component score is linear") {
  const auto p = GaussianMixturePrior::homogeneous({1.0}, {Vec64{0.5, -0.2}}, 0.04);
  const Vector x = (Vector(2) << 0.3, 1.1).finished();
  const double ab = 0.3, v = ab * 0.04 + 0.7;
  const Vector expect = (std::sqrt(ab) * p.mean(0) - x) / v;
  CHECK((analytic_score(p, x, ab) - expect).norm() < 1e-15);
}

TEST_CASE("score matches finite differences of log p_t") {
  Rng rng(1);
  const auto p = GaussianMixturePrior({0.2, 0.5, 0.3}, {Vec64{1.0, 0.0, -1.0}, Vec64{-0.5, 0.5, 0.2}, Vec64{0.0, -1.0, 1.0}},
                                      {0.05, 0.2, 0.1});
  for (double ab : {0.999, 0.7, 0.2, 0.01}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = gaussian_eigen(rng, 3);
      const Vector s = analytic_score(p, x, ab);
      Vector fd(3);
      const double h = 1e-5;
      for (Eigen::Index i = 0; i < 3; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        fd[i] = (log_marginal(p, xp, ab) - log_marginal(p, xm, ab)) / (2 * h);
      }
      CHECK((s - fd).norm() <= 1e-6 * fd.norm());
    }
  }
}

TEST_CASE("score tends to -x as alpha_bar vanishes") {
  Rng rng(2);
  const auto p = separated_world(rng, 6, 3, 1.0, 0.1);
  const Vector x = gaussian_eigen(rng, 6);
  CHECK((analytic_score(p, x, 1e-8) + x).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("score Jacobian matches finite differences and is symmetric") {
  Rng rng(3);
  const auto p = separated_world(rng, 5, 4, 0.5, 0.3);
  for (double ab : {0.9, 0.3}) {
    const Vector x = gaussian_eigen(rng, 5);
    const ScoreTerms st = score_terms(p, x, ab);
    Matrix jac(5, 5), fd(5, 5);
    for (Eigen::Index i = 0; i < 5; ++i) {
      jac.col(i) = score_jvp(st, Vector::Unit(5, i));
      Vector xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      fd.col(i) = (analytic_score(p, xp, ab) - analytic_score(p, xm, ab)) / 2e-6;
    }
    CHECK((jac - fd).norm() <= 1e-6 * fd.norm());
    CHECK((jac - jac.transpose()).norm() < 1e-12);
    // Tweedie Jacobian (I + (1 - ab) J) / sqrt(ab).
    Matrix tw(5, 5);
    for (Eigen::Index i = 0; i < 5; ++i) tw.col(i) = denoise_jvp(st, Vector::Unit(5, i));
    const Matrix ref = (Matrix::Identity(5, 5) + (1.0 - ab) * jac) / std::sqrt(ab);
    CHECK((tw - ref).norm() <= 1e-12 * ref.norm());
    CHECK((st.denoised - (x + (1.0 - ab) * st.score) / std::sqrt(ab)).norm() < 1e-12);
  }
}

TEST_CASE("k = 1 single component generator is the closed-form affine map") {
  const auto p = GaussianMixturePrior::homogeneous({1.0}, {Vec64{0.4, -0.3, 0.1}}, 0.09);
  const DdimGenerator g(NoiseSchedule::linear(), p, 1);
  const double ab = g.schedule().alpha_bar(1000);
  const double v = ab * 0.09 + 1.0 - ab;
  const Vector z = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Vector expect = (std::sqrt(ab) * 0.09 / v) * z + ((1.0 - ab) / v) * p.mean(0);
  CHECK((g.generate(z) - expect).norm() < 1e-14);
  const Vector c = (Vector(3) << 0.3, 0.2, -1.0).finished();
  CHECK((g.generate_vjp(z, c) - (std::sqrt(ab) * 0.09 / v) * c).norm() < 1e-16);
}

TEST_CASE("single component VJP equals the explicit Jacobian transpose") {
  const auto p = GaussianMixturePrior::homogeneous({1.0}, {Vec64{0.4, -0.3, 0.1, 0.0}}, 0.09);
  const DdimGenerator g(NoiseSchedule::linear(), p, 3);
  Rng rng(4);
  const Vector z = gaussian_eigen(rng, 4);
  Matrix jac(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i) jac.col(i) = g.generate_jvp(z, Vector::Unit(4, i));
  const Vector c = gaussian_eigen(rng, 4);
  CHECK((g.generate_vjp(z, c) - jac.transpose() * c).norm() < 1e-14);
  // Affine: Jacobian independent of z.
  Matrix jac2(4, 4);
  const Vector z2 = gaussian_eigen(rng, 4);
  for (Eigen::Index i = 0; i < 4; ++i) jac2.col(i) = g.generate_jvp(z2, Vector::Unit(4, i));
  CHECK((jac - jac2).norm() < 1e-14);
}

TEST_CASE("generator VJP matches finite differences") {
  Rng rng(5);
  for (std::size_t k : {1, 3}) {
    for (std::size_t n : {8, 48}) {
      const auto p = separated_world(rng, n, 4, 1.0, 0.1);
      const DdimGenerator g(NoiseSchedule::linear(), p, k);
      for (int probe = 0; probe < 5; ++probe) {
        const Vector z = gaussian_eigen(rng, n);
        const Vector c = gaussian_eigen(rng, n);
        const Vector vjp = g.generate_vjp(z, c);
        const Vector fd = fd_gradient_of_contraction(g, z, c, 1e-4);
        CHECK((vjp - fd).norm() <= 1e-5 * fd.norm());
      }
    }
  }
}

TEST_CASE("VJP and JVP are consistent and VJP is linear") {
  Rng rng(6);
  const auto p = separated_world(rng, 12, 5, 1.0, 0.2);
  const DdimGenerator g(NoiseSchedule::linear(), p, 8);
  for (int probe = 0; probe < 10; ++probe) {
    const Vector z = gaussian_eigen(rng, 12), c = gaussian_eigen(rng, 12), dz = gaussian_eigen(rng, 12);
    CHECK(std::abs(c.dot(g.generate_jvp(z, dz)) - g.generate_vjp(z, c).dot(dz)) < 1e-10);
    const Vector c2 = gaussian_eigen(rng, 12);
    CHECK((g.generate_vjp(z, c + c2) - g.generate_vjp(z, c) - g.generate_vjp(z, c2)).norm() < 1e-12);
    Vector pulled;
    const Vector out = g.generate_with_vjp(z, c, pulled);
    CHECK(out == g.generate(z));
    CHECK(pulled == g.generate_vjp(z, c));
  }
}

TEST_CASE("generator linearization error is second order") {
  Rng rng(7);
  const auto p = separated_world(rng, 10, 3, 1.0, 0.1);
  const DdimGenerator g(NoiseSchedule::linear(), p, 3);
  const Vector z = gaussian_eigen(rng, 10);
  const Vector dir = gaussian_eigen(rng, 10);
  const Vector g0 = g.generate(z);
  double prev = -1.0;
  for (double h = 1e-1; h > 1e-3; h /= 2.0) {
    const double err = (g.generate(z + h * dir) - g0 - g.generate_jvp(z, h * dir)).norm();
    if (prev > 0.0) CHECK(prev / err >= 1.9);
    prev = err;
  }
}

TEST_CASE("mode attraction and determinism") {
  Rng rng(8);
  const auto p = separated_world(rng, 6, 3, 3.0, 0.1);
  // The start point sqrt(ab_t1) mu_j only singles out a mode when the means stay
  // separated at t1, so attraction uses a shorter schedule.
  for (std::size_t k : {3, 8}) {
    const DdimGenerator g(NoiseSchedule::linear(100), p, k);
    const double sa = std::sqrt(g.schedule().alpha_bar(g.steps().front()));
    for (std::size_t j = 0; j < 3; ++j) {
      const Vector out = g.generate(sa * p.mean(j));
      CHECK((out - p.mean(j)).cwiseAbs().maxCoeff() <= 3.0 * (0.1 + 0.05));
    }
    const Vector z = gaussian_eigen(rng, 6);
    CHECK(g.generate(z) == g.generate(z));
  }
  Rng a(9), b(9);
  const DdimGenerator g(NoiseSchedule::linear(), p, 3);
  CHECK(g.sample_prior(a, 1).front() == g.sample_prior(b, 1).front());
}

TEST_CASE("full sampler reproduces mixture weights") {
  Rng rng(10);
  const auto p = GaussianMixturePrior({0.2, 0.5, 0.3}, {Vec64{2.0, 0.0}, Vec64{-2.0, 1.0}, Vec64{0.0, -2.5}}, {0.01, 0.01, 0.01});
  const DdimGenerator g(NoiseSchedule::linear(), p, 1000);
  const std::size_t count = 2000;
  const auto xs = g.sample_prior(rng, count);
  std::vector<double> freq(3, 0.0);
  for (const auto& x : xs) freq[nearest_mean(p, x)] += 1.0 / static_cast<double>(count);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(freq[j] - p.weight(j)) <= 0.05);
}

TEST_CASE("fidelity improves with step count") {
  Rng rng(11);
  const auto p = separated_world(rng, 4, 3, 2.0, 0.1);
  const double n = 4.0;
  double prev = 1.0, prev_se = 0.0, first_dist = 0.0, last_dist = 0.0;
  for (std::size_t k : {1, 2, 3, 8, 1000}) {
    const DdimGenerator g(NoiseSchedule::linear(), p, k);
    Rng r(12);  // common random numbers across k
    const auto xs = g.sample_prior(r, 1000);
    // Off-mode rate: samples farther than tau (sqrt(n) + 3) from every mean.
    double off = 0.0;
    for (const auto& x : xs) {
      const std::size_t j = nearest_mean(p, x);
      off += (x - p.mean(j)).norm() > std::sqrt(p.tau2(j)) * (std::sqrt(n) + 3.0);
    }
    off /= static_cast<double>(xs.size());
    const double se = std::sqrt(off * (1.0 - off) / static_cast<double>(xs.size()));
    CHECK(off <= prev + 3.0 * std::hypot(se, prev_se));
    prev = off;
    prev_se = se;
    double se_d = 0.0;
    const double d = mean_nearest_distance(p, xs, &se_d);
    if (k == 1) first_dist = d;
    last_dist = d;
  }
  CHECK(first_dist > last_dist);
  CHECK(prev < 0.01);
}
