// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance harness: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "weakprior/consistency.hpp"
#include "weakprior/ddim.hpp"
#include "weakprior/experiments.hpp"
#include "weakprior/identifiability.hpp"
#include "weakprior/mixture_posterior.hpp"
#include "weakprior/numeric.hpp"
#include "weakprior/sphere_opt.hpp"

using namespace weakprior;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
double rel(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian();
  return a;
}

GaussianMixturePrior random_prior(Rng& rng, std::size_t n, std::size_t mc, double spread, bool hetero) {
  std::vector<double> w(mc), t2(mc);
  std::vector<Vec64> means;
  for (std::size_t j = 0; j < mc; ++j) {
    w[j] = 0.2 + rng.uniform();
    means.emplace_back(Vector(spread * gaussian_eigen(rng, n)));
    t2[j] = hetero ? 0.05 + 0.5 * rng.uniform() : 0.3;
  }
  return GaussianMixturePrior::from_unnormalized(w, means, t2);
}

// ---- 1 ----------------------------------------------------------------------

// Tensor trapezoid over a box covering every posterior component; returns
// per-component mass and first moments of w_j N(x; mu_j, tau_j^2 I) p(y | x).
void quadrature_oracle(const GaussianMixturePrior& prior, const Observation& obs, const PosteriorMixture& post,
                       std::vector<double>& mass, std::vector<Vector>& first) {
  const std::size_t n = prior.dim(), mc = prior.components();
  Vector lo = Vector::Constant(static_cast<Eigen::Index>(n), kInf), hi = -lo;
  for (std::size_t j = 0; j < mc; ++j) {
    const Matrix c = post.covariance(j);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double half = 14.0 * std::sqrt(c(ii, ii));
      lo[ii] = std::min(lo[ii], post.means[j][ii] - half);
      hi[ii] = std::max(hi[ii], post.means[j][ii] + half);
    }
  }
  const std::size_t pts = n == 1 ? 200001 : 2001;
  const Matrix a = obs.op.to_dense();
  const Vector y = obs.y.values();
  mass.assign(mc, 0.0);
  first.assign(mc, Vector::Zero(static_cast<Eigen::Index>(n)));
  std::vector<std::size_t> idx(n, 0);
  const double sig2 = obs.noise_sigma * obs.noise_sigma;
  const double lik_norm = -0.5 * static_cast<double>(a.rows()) * (kLog2Pi + std::log(sig2));
  for (;;) {
    Vector x(static_cast<Eigen::Index>(n));
    double wq = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      x[ii] = lo[ii] + (hi[ii] - lo[ii]) * static_cast<double>(idx[i]) / static_cast<double>(pts - 1);
      wq *= (idx[i] == 0 || idx[i] == pts - 1) ? 0.5 : 1.0;
    }
    const double loglik = lik_norm - 0.5 * (y - a * x).squaredNorm() / sig2;
    for (std::size_t j = 0; j < mc; ++j) {
      const double lp = prior.log_weight(j) - 0.5 * static_cast<double>(n) * (kLog2Pi + std::log(prior.tau2(j))) -
                        0.5 * (x - prior.mean(j)).squaredNorm() / prior.tau2(j);
      const double v = wq * std::exp(lp + loglik);
      mass[j] += v;
      first[j] += v * x;
    }
    std::size_t d = 0;
    while (d < n && ++idx[d] == pts) idx[d++] = 0;
    if (d == n) break;
  }
}

Verdict criterion_posterior() {
  Verdict v;
  Rng rng(101);
  double worst_w = 0.0, worst_mu = 0.0, worst_form = 0.0;
  for (std::size_t n : {1, 2}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto prior = random_prior(rng, n, 3, 1.0, true);
      const auto op = LinearOperator::dense(random_matrix(rng, n, n) * 0.8 + Matrix::Identity(n, n));
      const Observation obs = observe(op, prior.mean(rng.below(3)) + 0.3 * gaussian_eigen(rng, n), 0.4, rng);
      const auto post = exact_posterior(prior, obs);
      std::vector<double> mass;
      std::vector<Vector> first;
      quadrature_oracle(prior, obs, post, mass, first);
      const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
      for (std::size_t j = 0; j < 3; ++j) {
        worst_w = std::max(worst_w, rel(post.weight(j), mass[j] / total));
        worst_mu = std::max(worst_mu, rel(post.means[j], Vector(first[j] / mass[j])));
        const auto info = information_form_component(prior, obs, j);
        worst_form = std::max(worst_form, rel(post.means[j], info.mean));
      }
    }
  }
  v.require(worst_w <= 1e-6, "weights vs quadrature");
  v.require(worst_mu <= 1e-6, "means vs quadrature");
  v.require(worst_form <= 1e-8, "winner form vs information form");
  v.note("max rel err weights " + fmt("%.1e", worst_w) + ", means " + fmt("%.1e", worst_mu) + ", forms " +
         fmt("%.1e", worst_form));
  return v;
}

// ---- 2 ----------------------------------------------------------------------

Verdict criterion_collapse() {
  Verdict v;
  Rng rng(202);
  std::size_t violations = 0, identifiable = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const std::size_t mc = 2 + rng.below(4);
    const auto prior = random_prior(rng, n, mc, 0.3 + rng.uniform(), rng.uniform() < 0.5);
    const LinearOperator op = rng.uniform() < 0.5 ? LinearOperator::identity(n)
                                                  : LinearOperator::dense(random_matrix(rng, 1 + rng.below(n), n));
    const Observation obs =
        observe(op, prior.mean(rng.below(mc)) + 0.3 * gaussian_eigen(rng, n), 0.05 + 0.5 * rng.uniform(), rng);
    const auto rep = collapse_report(prior, obs);
    if (!rep.assumption2_holds) continue;
    ++identifiable;
    violations += !(rep.log_p_not_jstar <= rep.log_bound);
  }
  v.require(violations == 0, "bound violations");
  v.require(identifiable >= 9000, "too few identifiable instances");
  CollapseSweepConfig cfg;
  cfg.separation = 0.0707;
  Rng sr(203);
  const auto sweep = collapse_m_sweep(cfg, sr);
  const double ratio = sweep.fitted_slope / -sweep.mean_delta;
  v.require(std::abs(ratio - 1.0) <= 0.15, "m-sweep slope");
  for (const auto& row : sweep.rows) v.require(row.log_p_not_jstar <= row.log_bound, "m-sweep row above bound");
  v.note(std::to_string(identifiable) + " identifiable instances, " + std::to_string(violations) +
         " violations; slope/(-delta) = " + fmt("%.3f", ratio));
  return v;
}

// ---- 3 ----------------------------------------------------------------------

Verdict criterion_score_identities() {
  Verdict v;
  Rng rng(303);
  const ImageShape s{16, 16, 3};
  const auto op = make_random_mask(s, 0.3, rng);
  const auto prior = random_prior(rng, s.size(), 4, 0.4, false);
  const double sigma = 0.01;
  const Observation obs = observe(op, 0.3 * gaussian_eigen(rng, s.size()), sigma, rng);
  const auto sc = component_scores(prior, obs);
  double worst = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    double sse = 0.0;
    for (std::size_t k = 0; k < op.mask_indices().size(); ++k) {
      const double d = obs.y[k] - prior.mean(j)[static_cast<Eigen::Index>(op.mask_indices()[k])];
      sse += d * d;
    }
    const double mse = sse / static_cast<double>(obs.m());
    const double expect = static_cast<double>(obs.m()) * mse / (2.0 * (sigma * sigma + prior.tau2(j)));
    worst = std::max(worst, std::abs(sc.s[static_cast<Eigen::Index>(j)] - expect) / std::max(1.0, expect));
  }
  v.require(worst <= 1e-12, "inpainting score identity");
  std::string blocks;
  for (std::size_t f : {2, 4}) {
    const auto aat = make_block_average(s, f).aat_structure();
    const auto* si = std::get_if<ScaledIdentity>(&aat);
    const double k = static_cast<double>(f * f);
    v.require(si != nullptr && si->c == 1.0 / k, "block-average AA^T = I/k");
    blocks += (blocks.empty() ? "" : ", ") + std::string("k=") + std::to_string(f * f) + " -> " +
              (si ? fmt("%.6g", si->c) : std::string("dense"));
  }
  v.note("score rel err " + fmt("%.1e", worst) + "; AA^T scale " + blocks);
  return v;
}

// ---- 4 ----------------------------------------------------------------------

Verdict criterion_hoeffding() {
  Verdict v;
  Rng rng(404);
  const auto means = make_separated_means(256, 2, 0.5, rng);
  const auto h = hoeffding_validate(means, 0, 32, 0.1, 0.1, 100000, rng);
  const double se = std::sqrt(std::min(1.0, h.predicted_bound) * (1.0 - std::min(1.0, h.predicted_bound)) / 1e5);
  v.require(h.frequency <= h.predicted_bound + 3.0 * se, "frequency above bound + 3 SE");
  v.require(h.passes, "validator verdict");
  v.note("failures " + std::to_string(h.failures) + "/1e5 (freq " + fmt("%.2e", h.frequency) + ") vs bound " +
         fmt("%.3g", h.predicted_bound) + "; sampled-separation freq " + fmt("%.2e", h.dhat_frequency) + " vs " +
         fmt("%.3g", h.dhat_bound));
  return v;
}

// ---- 5 ----------------------------------------------------------------------

Verdict criterion_consistency() {
  Verdict v;
  const auto r = run_consistency_preset();
  const auto& rows = r.rows;
  v.require(rows.back().mass_a >= 0.99 && rows.back().mass_b >= 0.99, "final mass below 0.99");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    v.require(rows[i].mass_a >= rows[i - 1].mass_a - 3.0 * std::hypot(rows[i].se_a, rows[i - 1].se_a) - 1e-12,
              "mass_A decreases at N = " + std::to_string(rows[i].n_obs));
    v.require(rows[i].mass_b >= rows[i - 1].mass_b - 3.0 * std::hypot(rows[i].se_b, rows[i - 1].se_b) - 1e-12,
              "mass_B decreases at N = " + std::to_string(rows[i].n_obs));
  }
  v.note("N = 1: " + fmt("%.3f", rows[1].mass_a) + " / " + fmt("%.3f", rows[1].mass_b) + "; N = " +
         std::to_string(rows.back().n_obs) + ": " + fmt("%.6f", rows.back().mass_a) + " / " +
         fmt("%.6f", rows.back().mass_b));
  return v;
}

// ---- 6 ----------------------------------------------------------------------

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

Verdict criterion_vjp() {
  Verdict v;
  Rng rng(606);
  double worst = 0.0;
  for (std::size_t k : {1, 3}) {
    for (std::size_t n : {8, 192}) {
      const auto p = separated_world(rng, n, 4, 1.0, 0.3);
      const DdimGenerator g(NoiseSchedule::linear(), p, k);
      for (int probe = 0; probe < 100; ++probe) {
        const Vector z = gaussian_eigen(rng, n);
        const Vector c = gaussian_eigen(rng, n);
        const Vector vjp = g.generate_vjp(z, c);
        Vector fd(z.size());
        const double h = 1e-4;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
          Vector zp = z, zm = z;
          zp[i] += h;
          zm[i] -= h;
          fd[i] = (c.dot(g.generate(zp)) - c.dot(g.generate(zm))) / (2.0 * h);
        }
        worst = std::max(worst, rel(vjp, fd));
      }
    }
  }
  v.require(worst <= 1e-5, "VJP vs central differences");
  v.note("400 probes, max rel err " + fmt("%.1e", worst));
  return v;
}

// ---- 7 ----------------------------------------------------------------------

Verdict criterion_adam_sphere() {
  Verdict v;
  double drift = 0.0, ortho = 0.0;
  {
    Rng rng(707);
    const std::size_t d = 32;
    AdamSphereConfig cfg;
    cfg.learning_rate = 0.05;
    SphereRunState s = init_sphere_state(gaussian_eigen(rng, d), cfg);
    for (int i = 0; i < 10000; ++i) {
      const Vector g = gaussian_eigen(rng, d) + s.z;
      // Direction the step is about to take, rebuilt from the moments.
      const Vector gt = tangent_project(s.z, g, s.radius);
      const Vector m1 = cfg.beta1 * s.first_moment + (1 - cfg.beta1) * gt;
      const Vector m2 = cfg.beta2 * s.second_moment + (1 - cfg.beta2) * gt.cwiseAbs2();
      const double t = static_cast<double>(s.step + 1);
      const Vector raw = (m1 / (1 - std::pow(cfg.beta1, t))).array() /
                         ((m2 / (1 - std::pow(cfg.beta2, t))).array().sqrt() + cfg.epsilon);
      const Vector dh = tangent_project(s.z, raw, s.radius);
      ortho = std::max(ortho, std::abs(dh.dot(s.z)) / (dh.norm() * s.radius));
      adam_sphere_step_inplace(s, cfg, g);
      drift = std::max(drift, std::abs(s.z.norm() - s.radius) / s.radius);
    }
  }
  double worst_loss = 0.0;
  for (const auto ret : {Retraction::Normalize, Retraction::ExpMap}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      const std::size_t d = 16;
      const double r = 4.0;
      Vector p = gaussian_eigen(rng, d);
      p *= r / p.norm();
      AdamSphereConfig c;
      c.learning_rate = 0.05;
      c.radius = r;
      c.retraction = ret;
      SphereRunState s = init_sphere_state(gaussian_eigen(rng, d), c);
      for (int i = 0; i < 500; ++i) adam_sphere_step_inplace(s, c, 2.0 * (s.z - p));
      worst_loss = std::max(worst_loss, (s.z - p).squaredNorm());
    }
  }
  v.require(drift <= 1e-9, "norm drift");
  v.require(worst_loss < 1e-8, "sphere-quadratic convergence");
  v.require(ortho <= 1e-12, "direction orthogonality");
  v.note("drift " + fmt("%.1e", drift) + " r, quadratic loss " + fmt("%.1e", worst_loss) + " at 500 steps, |<d,z>| " +
         fmt("%.1e", ortho) + " relative");
  return v;
}

// ---- 8 ----------------------------------------------------------------------

Verdict criterion_topk() {
  Verdict v;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto run = fixtures::u_shaped_run(600, 5, seed);
    worst = std::max(worst, run.selected_holdout / run.min_holdout);
  }
  v.require(worst <= 1.05, "selected holdout above 1.05x minimum");
  Rng rng(808);
  bool exact = true;
  for (int trial = 0; trial < 100; ++trial) {
    TopKBuffer b(1);
    double best = kInf;
    std::size_t best_step = 0;
    for (std::size_t s = 0; s < 300; ++s) {
      const double x = std::round(20.0 * rng.uniform()) / 4.0;
      b.update(x, s, Vector::Constant(1, static_cast<double>(s)));
      if (x < best) {
        best = x;
        best_step = s;
      }
    }
    exact = exact && b.select().step == best_step && b.select().z[0] == static_cast<double>(best_step);
  }
  v.require(exact, "K = 1 differs from best checkpoint");
  v.note("worst selected/min holdout " + fmt("%.4f", worst) + " over 20 runs; K = 1 exact over 100 traces");
  return v;
}

// ---- 9 ----------------------------------------------------------------------

Verdict criterion_robustness() {
  Verdict v;
  const auto r = robustness_experiment(WorldRunConfig{});
  v.require(r.rows.size() >= 20, "fewer than 20 worlds");
  v.require(r.agreement >= 0.95, "mode agreement below 95%");
  v.require(r.median_abs_psnr_diff <= 2.0, "median PSNR difference above 2 dB");
  v.note(std::to_string(r.rows.size()) + " worlds, agreement " + fmt("%.2f", r.agreement) + ", median |dPSNR| " +
         fmt("%.2f", r.median_abs_psnr_diff) + " dB (matched " + fmt("%.2f", r.median_psnr_matched) +
         ", mismatched " + fmt("%.2f", r.median_psnr_mismatched) + ")");
  return v;
}

// ---- 10 ---------------------------------------------------------------------

Verdict criterion_failure_modes() {
  Verdict v;
  const auto r = failure_sweep(FailureSweepConfig::defaults());
  std::string deltas, gaps;
  for (std::size_t i = 0; i < r.box.size(); ++i) {
    if (i) {
      v.require(r.box[i].mean_delta <= r.box[i - 1].mean_delta, "delta increases with box fraction");
      v.require(r.box[i].mean_gap >= r.box[i - 1].mean_gap, "PSNR gap decreases with box fraction");
    }
    deltas += (i ? " " : "") + fmt("%.4f", r.box[i].mean_delta);
    gaps += (i ? " " : "") + fmt("%.2f", r.box[i].mean_gap);
  }
  v.require(r.sr.size() == 2 && r.sr[1].mean_gap > r.sr[0].mean_gap, "coarser SR not more prior-sensitive");
  v.note("box delta " + deltas + "; gap " + gaps + " dB; SR gap x2 " + fmt("%.2f", r.sr[0].mean_gap) + " vs x4 " +
         fmt("%.2f", r.sr[1].mean_gap) + " dB");
  return v;
}

// ---- 11 ---------------------------------------------------------------------

Verdict criterion_dps() {
  Verdict v;
  const auto rows = dps_sanity(DpsSanityConfig::defaults());
  std::string d;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) v.require(rows[i].mean_distance < rows[i - 1].mean_distance, "distance not decreasing");
    d += (i ? ", " : "") + std::to_string(rows[i].steps) + ": " + fmt("%.4f", rows[i].mean_distance);
  }
  v.note("mean distance to posterior mean by steps " + d);
  return v;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // <= 0: none
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> all = {
      {1, "posterior exactness", 5, criterion_posterior},
      {2, "collapse bound", 60, criterion_collapse},
      {3, "score-MSE identities", 0, criterion_score_identities},
      {4, "Hoeffding validation", 60, criterion_hoeffding},
      {5, "posterior consistency", 30, criterion_consistency},
      {6, "generator gradients", 30, criterion_vjp},
      {7, "AdamSphere", 0, criterion_adam_sphere},
      {8, "HoldoutTopK", 0, criterion_topk},
      {9, "weak-prior robustness", 300, criterion_robustness},
      {10, "failure modes", 300, criterion_failure_modes},
      {11, "DPS baseline sanity", 0, criterion_dps},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.note(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0 && secs > c.limit_seconds) {
      v.pass = false;
      v.note("runtime limit " + fmt("%.0f", c.limit_seconds) + " s exceeded");
    }
    failed += !v.pass;
    std::printf("[%s] %2d %-24s %7.2fs  %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, secs, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", all.size() - static_cast<std::size_t>(failed), all.size());
  return failed ? 1 : 0;
}
