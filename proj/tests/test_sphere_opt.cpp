// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "weakprior/numeric.hpp"
#include "weakprior/sphere_opt.hpp"

using namespace weakprior;

namespace {

Vector on_sphere(Rng& rng, std::size_t d, double r) {
  const Vector g = gaussian_eigen(rng, d);
  return (r / g.norm()) * g;
}

double max_drift(Retraction ret, std::size_t steps) {
  Rng rng(11);
  const std::size_t d = 32;
  AdamSphereConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.retraction = ret;
  SphereRunState s = init_sphere_state(gaussian_eigen(rng, d), cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    adam_sphere_step_inplace(s, cfg, gaussian_eigen(rng, d) + s.z);
    worst = std::max(worst, std::abs(s.z.norm() - s.radius) / s.radius);
  }
  return worst;
}

}  // namespace

TEST_CASE("config validation") {
  AdamSphereConfig c;
  c.validate();
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.beta1 = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.radius = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK(retraction_from_string("expmap") == Retraction::ExpMap);
  CHECK_THROWS_AS(retraction_from_string("cayley"), InvalidArgument);
  HoldoutConfig h;
  h.fraction = 0.6;
  CHECK_THROWS_AS(h.validate(), InvalidArgument);
  h.fraction = 0.1;
  h.k = 0;
  CHECK_THROWS_AS(h.validate(), InvalidArgument);
}

TEST_CASE("init places z0 on the sphere") {
  AdamSphereConfig c;
  Vector z0(3);
  z0 << 3.0, 0.0, 4.0;
  CHECK(init_sphere_state(z0, c).radius == 5.0);
  c.radius = 2.0;
  const auto s = init_sphere_state(z0, c);
  CHECK(s.z.norm() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(init_sphere_state(Vector::Zero(3), c), InvalidArgument);
}

TEST_CASE("tangent projection") {
  Vector z(2), g(2);
  z << 0.0, 2.0;
  g << 0.0, 5.0;
  CHECK(tangent_project(z, g, 2.0).norm() == 0.0);
  g << 3.0, 0.0;
  CHECK(tangent_project(z, g, 2.0) == g);
  CHECK_THROWS_AS(tangent_project(z, g, 0.0), InvalidArgument);

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.below(200);
    const double r = std::exp(4.0 * rng.uniform() - 2.0);
    const Vector zz = on_sphere(rng, d, r);
    const Vector gg = 10.0 * gaussian_eigen(rng, d);
    REQUIRE(std::abs(tangent_project(zz, gg, r).dot(zz)) <= 1e-12 * gg.norm() * r);
  }
}

TEST_CASE("zero gradient leaves z fixed and decays moments") {
  Rng rng(5);
  AdamSphereConfig c;
  SphereRunState s = init_sphere_state(gaussian_eigen(rng, 8), c);
  s = adam_sphere_step(s, c, gaussian_eigen(rng, 8));
  const Vector z = s.z;
  const Vector m1 = s.first_moment, m2 = s.second_moment;
  s = adam_sphere_step(s, c, Vector::Zero(8));
  CHECK((s.z - z).norm() > 0.0);  // momentum still moves z
  CHECK((s.first_moment - 0.9 * m1).norm() < 1e-15);
  CHECK((s.second_moment - 0.999 * m2).norm() < 1e-15);

  SphereRunState fresh = init_sphere_state(z, c);
  fresh = adam_sphere_step(fresh, c, Vector::Zero(8));
  CHECK(fresh.z == z);
  CHECK(fresh.step == 1);
}

TEST_CASE("norm drift over 1e4 steps") {
  CHECK(max_drift(Retraction::Normalize, 10000) <= 1e-9);
  CHECK(max_drift(Retraction::ExpMap, 10000) <= 1e-7);
}

TEST_CASE("update direction is tangent") {
  Rng rng(17);
  AdamSphereConfig c;
  SphereRunState s = init_sphere_state(gaussian_eigen(rng, 24), c);
  for (int i = 0; i < 50; ++i) {
    const Vector g = gaussian_eigen(rng, 24) * 3.0;
    adam_sphere_step_inplace(s, c, g);
    // Recompute the direction the next step would use.
    SphereRunState probe = s;
    const Vector gt = tangent_project(probe.z, g, probe.radius);
    const Vector m1 = c.beta1 * probe.first_moment + (1 - c.beta1) * gt;
    const Vector m2 = c.beta2 * probe.second_moment + (1 - c.beta2) * gt.cwiseAbs2();
    const double t = static_cast<double>(probe.step + 1);
    const Vector d = (m1 / (1 - std::pow(c.beta1, t))).array() /
                     ((m2 / (1 - std::pow(c.beta2, t))).array().sqrt() + c.epsilon);
    const Vector dh = tangent_project(probe.z, d, probe.radius);
    REQUIRE(std::abs(dh.dot(probe.z)) <= 1e-12 * dh.norm() * probe.radius);
  }
}

TEST_CASE("sphere quadratic converges") {
  for (const auto ret : {Retraction::Normalize, Retraction::ExpMap}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      const std::size_t d = 16;
      const double r = 4.0;
      const Vector p = on_sphere(rng, d, r);
      AdamSphereConfig c;
      c.learning_rate = 0.05;
      c.radius = r;
      c.retraction = ret;
      SphereRunState s = init_sphere_state(gaussian_eigen(rng, d), c);
      double loss = 0.0;
      for (int i = 0; i < 500; ++i) {
        adam_sphere_step_inplace(s, c, 2.0 * (s.z - p));
        loss = (s.z - p).squaredNorm();
      }
      CAPTURE(seed);
      CHECK(loss < 1e-8);
    }
  }
}

TEST_CASE("large radius approaches plain Adam iterates") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 10;
    const Vector g0 = gaussian_eigen(rng, d);
    const double r = 1e6 * g0.norm();
    AdamSphereConfig c;
    c.learning_rate = 0.05;
    const Vector z0 = on_sphere(rng, d, r);
    SphereRunState s = init_sphere_state(z0, c);
    AdamState a = init_adam_state(z0);
    for (int i = 0; i < 10; ++i) {
      const Vector g = i == 0 ? g0 : gaussian_eigen(rng, d);
      adam_sphere_step_inplace(s, c, g);
      adam_step_inplace(a, c, g);
    }
    REQUIRE((s.z - a.x).norm() / a.x.norm() <= 1e-3);
  }
}

TEST_CASE("holdout split") {
  HoldoutConfig c;
  c.fraction = 0.2;
  Rng rng(1);
  const auto sp = holdout_split(10, c, rng);
  CHECK(sp.holdout.size() == 2);
  CHECK(sp.fit.size() == 8);
  std::set<std::size_t> all(sp.fit.begin(), sp.fit.end());
  for (auto i : sp.holdout) CHECK(all.insert(i).second);
  CHECK(all.size() == 10);
  CHECK(*all.rbegin() == 9);

  c.seed = 42;
  c.fraction = 0.1;
  const auto a = holdout_split(1000, c), b = holdout_split(1000, c);
  CHECK(a.holdout == b.holdout);
  CHECK(a.holdout.size() == 100);
  c.seed = 43;
  CHECK(holdout_split(1000, c).holdout != a.holdout);

  c.fraction = 0.1;
  CHECK_THROWS_AS(holdout_split(4, c), InvalidArgument);  // round(0.4) = 0
  CHECK_THROWS_AS(holdout_split(1, c), InvalidArgument);
}

TEST_CASE("top-K semantics") {
  const Vector z = Vector::Zero(1);
  TopKBuffer b(2);
  CHECK_THROWS_AS(b.select(), InvalidState);
  b = topk_update(b, 5.0, 1, z);
  b = topk_update(b, 3.0, 2, z);
  b = topk_update(b, 4.0, 3, z);
  REQUIRE(b.size() == 2);
  CHECK(b.entries()[0].score == 3.0);
  CHECK(b.entries()[0].step == 2);
  CHECK(b.entries()[1].step == 3);
  CHECK(topk_select(b).step == 3);

  // Ties: a full buffer only changes on strict improvement.
  CHECK_FALSE(b.update(4.0, 9, z));
  TopKBuffer t(3);
  t.update(1.0, 1, z);
  t.update(1.0, 2, z);
  CHECK(t.entries()[0].step == 1);
  CHECK(t.entries()[1].step == 2);

  TopKBuffer dec(5);
  for (std::size_t s = 0; s < 100; ++s) dec.update(100.0 - static_cast<double>(s), s, z);
  CHECK(dec.select().step == 99);
  CHECK_THROWS_AS(TopKBuffer(0), InvalidArgument);
}

TEST_CASE("K = 1 is best-checkpoint selection") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    TopKBuffer b(1);
    double best = kInf;
    std::size_t best_step = 0;
    for (std::size_t s = 0; s < 200; ++s) {
      // Quantized scores produce ties.
      const double v = std::round(20.0 * rng.uniform()) / 4.0;
      b.update(v, s, Vector::Constant(1, static_cast<double>(s)));
      if (v < best) {
        best = v;
        best_step = s;
      }
    }
    REQUIRE(b.select().step == best_step);
    REQUIRE(b.select().z[0] == static_cast<double>(best_step));
  }
}

TEST_CASE("U-shaped holdout: selection stays in the basin") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto run = fixtures::u_shaped_run(600, 5, seed);
    for (std::size_t t = 1; t < run.fit.size(); ++t) REQUIRE(run.fit[t] < run.fit[t - 1]);
    CAPTURE(seed);
    CHECK(run.selected_holdout <= 1.05 * run.min_holdout);
    CHECK(run.selected < 400);
  }
}
