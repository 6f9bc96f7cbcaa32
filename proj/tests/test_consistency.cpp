// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "weakprior/consistency.hpp"

using namespace weakprior;

namespace {

Matrix random_spd(Rng& rng, Eigen::Index n, double scale) {
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.gaussian();
  return scale * (b * b.transpose() + 0.1 * Matrix::Identity(n, n));
}

}  // namespace

TEST_CASE("ball probability closed forms") {
  Vector c = Vector::Zero(1), m(1);
  m << 0.3;
  Matrix v(1, 1);
  v << 0.04;
  const double expect = 0.5 * (std::erf((0.5 - 0.3) / (0.2 * std::sqrt(2.0))) + std::erf((0.5 + 0.3) / (0.2 * std::sqrt(2.0))));
  CHECK(gaussian_ball_probability(m, v, c, 0.5) == doctest::Approx(expect).epsilon(1e-13));

  // Centered isotropic: Rayleigh in 2D, Maxwell in 3D.
  for (double s : {0.05, 0.3, 2.0}) {
    for (double r : {0.1, 0.5, 1.5}) {
      const double a = r / s;
      const double p2 = gaussian_ball_probability(Vector::Zero(2), s * s * Matrix::Identity(2, 2), Vector::Zero(2), r);
      CHECK(std::abs(p2 - (1.0 - std::exp(-0.5 * a * a))) <= 1e-10);
      const double p3 = gaussian_ball_probability(Vector::Zero(3), s * s * Matrix::Identity(3, 3), Vector::Zero(3), r);
      const double maxwell = std::erf(a / std::sqrt(2.0)) - std::sqrt(2.0 / std::numbers::pi) * a * std::exp(-0.5 * a * a);
      CHECK(std::abs(p3 - maxwell) <= 1e-9);
    }
  }
  CHECK(gaussian_ball_probability(Vector::Zero(2), Matrix::Identity(2, 2), Vector::Zero(2), 0.0) == 0.0);
  CHECK_THROWS_AS(gaussian_ball_probability(Vector::Zero(4), Matrix::Identity(4, 4), Vector::Zero(4), 1.0),
                  InvalidArgument);
}

TEST_CASE("quadrature agrees with Monte Carlo on anisotropic Gaussians") {
  Rng rng(2);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(trial % 3);
    GaussianList g;
    g.weights = {0.3, 0.7};
    for (int j = 0; j < 2; ++j) {
      g.means.push_back(gaussian_eigen(rng, static_cast<std::size_t>(n)) * 0.5);
      g.covariances.push_back(random_spd(rng, n, 0.1 + 0.2 * rng.uniform()));
    }
    const Vector center = gaussian_eigen(rng, static_cast<std::size_t>(n)) * 0.3;
    const double radius = 0.3 + rng.uniform();
    Rng a(trial), b(trial);
    const auto q = ball_mass(g, center, radius, a);
    const auto mc = ball_mass(g, center, radius, b, 400000, true);
    CHECK(q.quadrature);
    CHECK(q.se == 0.0);
    CHECK_FALSE(mc.quadrature);
    CAPTURE(trial);
    CHECK(std::abs(q.mass - mc.mass) <= 4.0 * mc.se + 1e-4);
  }
}

TEST_CASE("Monte Carlo path above three dimensions") {
  Rng rng(3);
  GaussianList g;
  g.weights = {1.0};
  g.means = {Vector::Zero(4)};
  g.covariances = {Matrix::Identity(4, 4)};
  Rng r(1);
  const auto bm = ball_mass(g, Vector::Zero(4), 1.5, r, 100000);
  // chi^2_4 CDF at 2.25: 1 - e^{-x/2}(1 + x/2)
  const double expect = 1.0 - std::exp(-1.125) * (1.0 + 1.125);
  CHECK_FALSE(bm.quadrature);
  CHECK(bm.se > 0.0);
  CHECK(std::abs(bm.mass - expect) <= 4.0 * bm.se);
}

TEST_CASE("no data gives the prior ball mass") {
  Rng rng(4);
  Rng prng(kDefaultConsistencySeed);
  const auto p = make_consistency_preset(prng);
  ConsistencyConfig cfg;
  cfg.n_values = {0, 3};
  const auto res = consistency_sweep(p.prior_a, p.prior_b, p.x_star, p.op, p.sigma, cfg, rng);
  Rng unused(0);
  const double pa = ball_mass(as_gaussian_list(p.prior_a), p.x_star, res.ball_radius, unused).mass;
  const double pb = ball_mass(as_gaussian_list(p.prior_b), p.x_star, res.ball_radius, unused).mass;
  CHECK(res.rows[0].mass_a == pa);
  CHECK(res.rows[0].mass_b == pb);
  CHECK(res.ball_radius == doctest::Approx(default_ball_radius(p.prior_a, p.prior_b)));
}

TEST_CASE("default preset concentrates and washes out the prior") {
  const auto res = run_consistency_preset();
  const auto& rows = res.rows;
  REQUIRE(rows.size() >= 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].mass_a >= rows[i - 1].mass_a - 3.0 * (rows[i].se_a + rows[i - 1].se_a));
    CHECK(rows[i].mass_b >= rows[i - 1].mass_b - 3.0 * (rows[i].se_b + rows[i - 1].se_b));
  }
  CHECK(rows.back().mass_a >= 0.99);
  CHECK(rows.back().mass_b >= 0.99);
  CHECK(std::abs(rows[1].mass_a - rows[1].mass_b) > 0.05);
  CHECK(std::abs(rows.back().mass_a - rows.back().mass_b) <= 0.01);
  // Same inputs, threaded: identical table.
  const auto again = run_consistency_preset(kDefaultConsistencySeed, 3);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(again.rows[i].mass_a == rows[i].mass_a);
}

TEST_CASE("expected ball mass grows with N") {
  // Single data realizations can dip; the average over realizations does not.
  Rng prng(kDefaultConsistencySeed);
  const auto p = make_consistency_preset(prng);
  ConsistencyConfig cfg;
  std::vector<double> avg_a(cfg.n_values.size(), 0.0), avg_b(cfg.n_values.size(), 0.0);
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    Rng rng(static_cast<std::uint64_t>(1000 + r));
    const auto res = consistency_sweep(p.prior_a, p.prior_b, p.x_star, p.op, p.sigma, cfg, rng);
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      avg_a[i] += res.rows[i].mass_a / reps;
      avg_b[i] += res.rows[i].mass_b / reps;
    }
  }
  for (std::size_t i = 1; i < avg_a.size(); ++i) {
    CAPTURE(i);
    CHECK(avg_a[i] >= avg_a[i - 1]);
    CHECK(avg_b[i] >= avg_b[i - 1]);
  }
}

TEST_CASE("winner is invariant to reweighting once the gap is large") {
  Rng prng(kDefaultConsistencySeed);
  const auto p = make_consistency_preset(prng);
  const auto heavy = p.prior_a.with_weights({0.05, 0.05, 0.9});
  const double c = std::max(p.prior_a.weight_ratio_bound(), heavy.weight_ratio_bound());
  Rng rng(9);
  ConsistencyConfig cfg;
  const auto res = consistency_sweep(p.prior_a, heavy, p.x_star, p.op, p.sigma, cfg, rng);
  // Selection scores do not involve the weights, so the winner agrees at
  // every N, in particular wherever the gap exceeds log(CM) / (N m).
  for (const auto& row : res.rows) {
    if (row.n_obs == 0) continue;
    const double m = static_cast<double>(row.n_obs * p.op.output_dim());
    CHECK(row.winner_a == row.winner_b);
    CHECK(row.gap_a == doctest::Approx(row.gap_b));
    if (row.gap_a > std::log(c * 3.0) / m) CHECK(row.winner_a == row.winner_b);
  }
}

TEST_CASE("sweep argument checks") {
  Rng prng(1);
  const auto p = make_consistency_preset(prng);
  ConsistencyConfig cfg;
  cfg.n_values = {5, 5};
  Rng rng(1);
  CHECK_THROWS_AS(consistency_sweep(p.prior_a, p.prior_b, p.x_star, p.op, p.sigma, cfg, rng), InvalidArgument);
  cfg.n_values = {1};
  CHECK_THROWS_AS(consistency_sweep(p.prior_a, p.prior_b, Vector::Zero(3), p.op, p.sigma, cfg, rng), InvalidArgument);
  CHECK_THROWS_AS(consistency_sweep(p.prior_a, p.prior_b, p.x_star, p.op, 0.0, cfg, rng), InvalidArgument);
}
