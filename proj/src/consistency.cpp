// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/consistency.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "weakprior/parallel.hpp"

namespace weakprior {

namespace {

constexpr int kNodes = 16;
constexpr int kPanels = 32;
constexpr double kTail = 9.0;  // standard-normal range kept by the outer rules

struct Legendre {
  std::array<double, kNodes> x{};
  std::array<double, kNodes> w{};
  Legendre() {
    for (int i = 0; i < kNodes; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (kNodes + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= kNodes; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = kNodes * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

const Legendre& legendre() {
  static const Legendre rule;
  return rule;
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }
double normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }

// P(sum_i (d_i + s_i xi_i)^2 <= rho2), xi_i iid standard normal.
double sum_square_probability(const double* d, const double* s, int k, double rho2) {
  if (rho2 <= 0.0) return 0.0;
  const double rho = std::sqrt(rho2);
  if (k == 1) {
    if (s[0] == 0.0) return std::abs(d[0]) <= rho ? 1.0 : 0.0;
    return std::max(0.0, normal_cdf((rho - d[0]) / s[0]) - normal_cdf((-rho - d[0]) / s[0]));
  }
  if (s[0] == 0.0) return sum_square_probability(d + 1, s + 1, k - 1, rho2 - d[0] * d[0]);
  const double lo = std::max(-kTail, (-rho - d[0]) / s[0]);
  const double hi = std::min(kTail, (rho - d[0]) / s[0]);
  if (!(lo < hi)) return 0.0;
  // xi = lo + (hi - lo)(1 - cos theta)/2 clusters nodes at the interval ends,
  // where the inner radius vanishes like a square root.
  const auto& gl = legendre();
  const double pi = std::numbers::pi;
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double a = pi * p / kPanels, b = pi * (p + 1) / kPanels;
    for (int i = 0; i < kNodes; ++i) {
      const double theta = 0.5 * (a + b) + 0.5 * (b - a) * gl.x[i];
      const double xi = lo + 0.5 * (hi - lo) * (1.0 - std::cos(theta));
      const double jac = 0.5 * (hi - lo) * std::sin(theta) * 0.5 * (b - a);
      const double u = d[0] + s[0] * xi;
      total += gl.w[i] * jac * normal_pdf(xi) * sum_square_probability(d + 1, s + 1, k - 1, rho2 - u * u);
    }
  }
  return std::min(1.0, std::max(0.0, total));
}

}  // namespace

double gaussian_ball_probability(const Vector& mean, const Matrix& cov, const Vector& center, double radius) {
  const auto n = mean.size();
  if (n == 0 || static_cast<std::size_t>(n) > kMaxQuadratureDim) {
    throw InvalidArgument("gaussian_ball_probability: quadrature supports 1 <= n <= 3");
  }
  if (cov.rows() != n || cov.cols() != n || center.size() != n) {
    throw InvalidArgument("gaussian_ball_probability: shape mismatch");
  }
  if (!(radius >= 0.0)) throw InvalidArgument("gaussian_ball_probability: radius must be >= 0");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()));
  const Vector offset = eig.eigenvectors().transpose() * (mean - center);
  std::array<double, kMaxQuadratureDim> d{}, s{};
  // Widest coordinate outermost.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return eig.eigenvalues()[a] > eig.eigenvalues()[b]; });
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto o = order[static_cast<std::size_t>(i)];
    d[static_cast<std::size_t>(i)] = offset[o];
    s[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, eig.eigenvalues()[o]));
  }
  return sum_square_probability(d.data(), s.data(), static_cast<int>(n), radius * radius);
}

GaussianList as_gaussian_list(const PosteriorMixture& post) {
  GaussianList out;
  for (std::size_t j = 0; j < post.components(); ++j) {
    out.weights.push_back(post.weight(j));
    out.means.push_back(post.means[j]);
    out.covariances.push_back(post.covariance(j));
  }
  return out;
}

GaussianList as_gaussian_list(const GaussianMixturePrior& prior) {
  GaussianList out;
  const auto n = static_cast<Eigen::Index>(prior.dim());
  for (std::size_t j = 0; j < prior.components(); ++j) {
    out.weights.push_back(prior.weight(j));
    out.means.push_back(prior.mean(j));
    out.covariances.push_back(prior.tau2(j) * Matrix::Identity(n, n));
  }
  return out;
}

BallMass ball_mass(const GaussianList& mix, const Vector& center, double radius, Rng& rng, std::size_t samples,
                   bool force_monte_carlo) {
  if (mix.weights.empty()) throw InvalidArgument("ball_mass: empty mixture");
  const auto n = static_cast<std::size_t>(center.size());
  BallMass out;
  if (n <= kMaxQuadratureDim && !force_monte_carlo) {
    out.quadrature = true;
    for (std::size_t j = 0; j < mix.weights.size(); ++j) {
      if (mix.weights[j] == 0.0) continue;
      out.mass += mix.weights[j] * gaussian_ball_probability(mix.means[j], mix.covariances[j], center, radius);
    }
    out.mass = std::min(1.0, out.mass);
    return out;
  }
  if (samples == 0) throw InvalidArgument("ball_mass: need at least one Monte Carlo sample");
  std::vector<Matrix> chol;
  for (const auto& c : mix.covariances) {
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() != Eigen::Success) throw DegenerateModel("ball_mass: covariance is not positive definite");
    chol.push_back(llt.matrixL());
  }
  std::size_t hits = 0;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < samples; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t j = 0;
    for (; j + 1 < mix.weights.size(); ++j) {
      acc += mix.weights[j];
      if (u < acc) break;
    }
    const Vector x = mix.means[j] + chol[j] * gaussian_eigen(rng, n);
    if ((x - center).squaredNorm() <= r2) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  out.mass = p;
  out.se = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  return out;
}

double default_ball_radius(const GaussianMixturePrior& a, const GaussianMixturePrior& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto* p : {&a, &b}) {
    for (std::size_t i = 0; i < p->components(); ++i) {
      for (std::size_t j = i + 1; j < p->components(); ++j) {
        best = std::min(best, (p->mean(i) - p->mean(j)).norm());
      }
    }
  }
  if (std::isinf(best)) throw InvalidArgument("default_ball_radius: need a prior with two components");
  return 0.5 * best;
}

ConsistencyResult consistency_sweep(const GaussianMixturePrior& prior_a, const GaussianMixturePrior& prior_b,
                                    const Vector& x_star, const LinearOperator& op, double sigma,
                                    const ConsistencyConfig& config, Rng& rng) {
  if (prior_a.dim() != prior_b.dim()) throw InvalidArgument("consistency_sweep: priors differ in dimension");
  if (static_cast<std::size_t>(x_star.size()) != prior_a.dim() || op.input_dim() != prior_a.dim()) {
    throw InvalidArgument("consistency_sweep: x* / operator dimension mismatch");
  }
  if (config.n_values.empty()) throw InvalidArgument("consistency_sweep: empty N list");
  for (std::size_t i = 1; i < config.n_values.size(); ++i) {
    if (config.n_values[i] <= config.n_values[i - 1]) {
      throw InvalidArgument("consistency_sweep: N list must be strictly increasing");
    }
  }
  if (!(sigma > 0.0)) throw InvalidArgument("consistency_sweep: sigma must be > 0");

  ConsistencyResult result;
  result.ball_radius = config.ball_radius.value_or(default_ball_radius(prior_a, prior_b));
  const Vector ax = op.apply(x_star);
  std::vector<Vec64> ys;
  ys.reserve(config.n_values.back());
  for (std::size_t i = 0; i < config.n_values.back(); ++i) {
    ys.emplace_back(Vector(ax + sigma * gaussian_eigen(rng, op.output_dim())));
  }
  const Rng base(rng.next_u64());
  result.rows.resize(config.n_values.size());
  parallel_for(config.n_values.size(), config.threads, [&](std::size_t i) {
    const std::size_t count = config.n_values[i];
    ConsistencyRow row;
    row.n_obs = count;
    const std::vector<Vec64> prefix(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(count));
    int which = 0;
    for (const auto* prior : {&prior_a, &prior_b}) {
      Rng mc = base.split(2 * i + static_cast<std::size_t>(which));
      GaussianList list;
      std::size_t winner = 0;
      double gap = 0.0;
      if (count == 0) {
        list = as_gaussian_list(*prior);
        winner = static_cast<std::size_t>(
            std::max_element(prior->weights().begin(), prior->weights().end()) - prior->weights().begin());
      } else {
        const auto post = posterior_for_iid_stack(*prior, op, prefix, sigma);
        list = as_gaussian_list(post);
        winner = post.winner;
        gap = post.gap.delta;
      }
      const BallMass bm = ball_mass(list, x_star, result.ball_radius, mc, config.mc_samples);
      if (which == 0) {
        row.mass_a = bm.mass;
        row.se_a = bm.se;
        row.winner_a = winner;
        row.gap_a = gap;
      } else {
        row.mass_b = bm.mass;
        row.se_b = bm.se;
        row.winner_b = winner;
        row.gap_b = gap;
      }
      ++which;
    }
    result.rows[i] = row;
  });
  return result;
}

ConsistencyPreset make_consistency_preset(Rng& rng) {
  const std::size_t n = 2;
  Matrix a(2, 2);
  for (;;) {
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian();
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& sv = svd.singularValues();
    if (sv[1] > 0.0 && sv[0] / sv[1] < 4.0) break;
  }
  auto draw_means = [&](const std::vector<Vector>& avoid, std::size_t count) {
    std::vector<Vector> out;
    while (out.size() < count) {
      Vector mu(2);
      mu << 4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0;
      bool ok = true;
      for (const std::vector<Vector>* set : {&avoid, static_cast<const std::vector<Vector>*>(&out)}) {
        for (const auto& v : *set) ok = ok && (v - mu).norm() >= 1.2;
      }
      if (ok) out.push_back(mu);
    }
    return out;
  };
  const auto ma = draw_means({}, 3);
  const auto mb = draw_means(ma, 3);
  auto to_vec64 = [](const std::vector<Vector>& v) {
    std::vector<Vec64> out;
    for (const auto& x : v) out.emplace_back(x);
    return out;
  };
  Vector x_star(static_cast<Eigen::Index>(n));
  x_star << 2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0;
  ConsistencyPreset p{GaussianMixturePrior::homogeneous({0.5, 0.3, 0.2}, to_vec64(ma), 0.25),
                      GaussianMixturePrior::homogeneous({0.2, 0.3, 0.5}, to_vec64(mb), 0.25),
                      x_star,
                      LinearOperator::dense(a),
                      1.0,
                      {}};
  return p;
}

ConsistencyResult run_consistency_preset(std::uint64_t seed, std::size_t threads) {
  Rng rng(seed);
  ConsistencyPreset p = make_consistency_preset(rng);
  p.config.threads = threads;
  return consistency_sweep(p.prior_a, p.prior_b, p.x_star, p.op, p.sigma, p.config, rng);
}

}  // namespace weakprior
