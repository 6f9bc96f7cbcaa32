// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/identifiability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "weakprior/forward_ops.hpp"
#include "weakprior/numeric.hpp"
#include "weakprior/parallel.hpp"

namespace weakprior {

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
};

MeanStd summarize(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double sq = 0.0;
  for (double x : v) sq += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(sq / n);
  out.min = *std::min_element(v.begin(), v.end());
  return out;
}

// Uniform m-subset of [0, n) by partial Fisher-Yates into `perm`.
void sample_subset(std::vector<std::size_t>& perm, std::size_t m, Rng& rng) {
  const std::size_t n = perm.size();
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(perm[i], perm[j]);
  }
}

}  // namespace

GapStats dataset_gap_stats(const SyntheticDataset& dataset, double keep_fraction, double sigma, double tau,
                           Rng& rng, std::size_t threads) {
  if (dataset.size() < 2) throw InvalidArgument("dataset_gap_stats: need at least two images");
  if (!(sigma >= 0.0) || !(tau >= 0.0) || sigma + tau == 0.0) {
    throw InvalidArgument("dataset_gap_stats: sigma, tau must be >= 0 and not both zero");
  }
  const ImageShape shape = dataset.shape();
  const double v = sigma * sigma + tau * tau;
  const std::size_t count = dataset.size();
  const Rng base(rng.next_u64());
  GapStats out;
  out.gaps.resize(count);
  out.mse_gaps.resize(count);
  out.winners.resize(count);
  std::vector<char> flagged(count, 0);
  parallel_for(count, threads, [&](std::size_t i) {
    Rng child = base.split(i);
    const LinearOperator op = make_random_mask(shape, keep_fraction, child);
    const Observation obs = observe(op, dataset.items[i].pixels().values(), sigma, child);
    Vector sse(static_cast<Eigen::Index>(count));
    for (std::size_t j = 0; j < count; ++j) {
      sse[static_cast<Eigen::Index>(j)] = (obs.y.values() - op.apply(dataset.items[j].pixels().values())).squaredNorm();
    }
    const GapResult g = per_dim_gap(sse / (2.0 * v), obs.m());
    out.gaps[i] = g.delta;
    out.mse_gaps[i] = g.delta * 2.0 * v;
    out.winners[i] = g.winner;
    flagged[i] = !g.identifiable;
  });
  const MeanStd s = summarize(out.gaps);
  out.mean = s.mean;
  out.std = s.std;
  out.min = s.min;
  out.mse_mean = summarize(out.mse_gaps).mean;
  std::size_t self = 0;
  for (std::size_t i = 0; i < count; ++i) self += out.winners[i] == i;
  out.self_win_rate = static_cast<double>(self) / static_cast<double>(count);
  out.flagged = static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), 1));
  out.keep_fraction = keep_fraction;
  out.label = dataset.label;
  return out;
}

HoeffdingCheck hoeffding_validate(const std::vector<Vec64>& means, std::size_t jstar, std::size_t m, double sigma,
                                  double tau, std::size_t trials, Rng& rng, std::size_t threads) {
  if (means.size() < 2) throw InvalidArgument("hoeffding_validate: need at least two means");
  if (jstar >= means.size()) throw InvalidArgument("hoeffding_validate: jstar out of range");
  const std::size_t n = means.front().size();
  if (m == 0 || m > n) throw InvalidArgument("hoeffding_validate: need 1 <= m <= n");
  if (trials == 0) throw InvalidArgument("hoeffding_validate: trials must be positive");
  if (!(sigma >= 0.0) || !(tau >= 0.0) || sigma + tau == 0.0) {
    throw InvalidArgument("hoeffding_validate: sigma, tau must be >= 0 and not both zero");
  }
  const std::size_t mc = means.size();
  for (const auto& mu : means) {
    if (mu.size() != n) throw InvalidArgument("hoeffding_validate: means must share one dimension");
    if (mu.values().cwiseAbs().maxCoeff() > 1.0) throw InvalidArgument("hoeffding_validate: mean entries must lie in [-1, 1]");
  }
  // Squared per-coordinate differences to mu_j*.
  std::vector<Vector> diff2(mc);
  std::vector<double> d(mc, 0.0);
  double separation = kInf;
  for (std::size_t j = 0; j < mc; ++j) {
    diff2[j] = (means[j].values() - means[jstar].values()).array().square().matrix();
    d[j] = diff2[j].sum() / static_cast<double>(n);
    if (j != jstar) separation = std::min(separation, d[j]);
  }
  if (!(separation > 0.0)) throw InvalidArgument("hoeffding_validate: a mean coincides with mu_j*");

  HoeffdingCheck out;
  out.separation = separation;
  const double v = sigma * sigma + tau * tau;
  out.threshold = separation / (8.0 * v);
  out.m = m;
  out.n = n;
  out.components = mc;
  out.jstar = jstar;
  out.sigma = sigma;
  out.tau = tau;
  out.trials = trials;
  const double md = static_cast<double>(m);
  const double d2 = separation * separation;
  const double pairs = 2.0 * static_cast<double>(mc - 1);
  out.mask_bound = pairs * std::exp(-md * d2 / 32.0);
  out.noise_bound = pairs * std::exp(-md * d2 / (32.0 * v));
  out.noise_bound_a4 = pairs * std::exp(-md * d2 / (512.0 * v));
  out.predicted_bound = out.mask_bound + out.noise_bound;
  out.dhat_bound = 2.0 * std::exp(-md * d2 / 32.0);

  // Chunked so each worker owns a contiguous block of trials.
  const std::size_t chunk = 1024;
  const std::size_t chunks = (trials + chunk - 1) / chunk;
  std::vector<std::size_t> fail(chunks, 0);
  std::vector<std::vector<std::size_t>> dhat_fail(chunks, std::vector<std::size_t>(mc, 0));
  const Rng base(rng.next_u64());
  const double sd = std::sqrt(v);
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<std::size_t> perm(n);
    std::vector<double> eta(m), s(mc), dh(mc);
    for (std::size_t t = c * chunk; t < std::min(trials, (c + 1) * chunk); ++t) {
      Rng r = base.split(t);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      sample_subset(perm, m, r);
      // eta = (P_Omega xi + eps) ~ N(0, (sigma^2 + tau^2) I_m).
      for (std::size_t k = 0; k < m; ++k) eta[k] = sd * r.gaussian();
      for (std::size_t j = 0; j < mc; ++j) {
        double acc = 0.0, dj = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          const auto i = static_cast<Eigen::Index>(perm[k]);
          const double res = means[jstar][perm[k]] - means[j][perm[k]] + eta[k];
          acc += res * res;
          dj += diff2[j][i];
        }
        s[j] = acc / (2.0 * v);
        dh[j] = dj / md;
      }
      double delta = kInf;
      for (std::size_t j = 0; j < mc; ++j) {
        if (j == jstar) continue;
        delta = std::min(delta, (s[j] - s[jstar]) / md);
        if (std::abs(dh[j] - d[j]) >= separation / 2.0) dhat_fail[c][j]++;
      }
      if (delta < out.threshold) fail[c]++;
    }
  });
  out.failures = std::accumulate(fail.begin(), fail.end(), std::size_t{0});
  for (std::size_t j = 0; j < mc; ++j) {
    std::size_t f = 0;
    for (const auto& row : dhat_fail) f += row[j];
    out.dhat_failures = std::max(out.dhat_failures, f);
  }
  const double td = static_cast<double>(trials);
  out.frequency = static_cast<double>(out.failures) / td;
  out.dhat_frequency = static_cast<double>(out.dhat_failures) / td;
  auto se = [&](double p) {
    const double q = std::clamp(p, 0.0, 1.0);
    return std::sqrt(q * (1.0 - q) / td);
  };
  out.standard_error = se(out.predicted_bound);
  out.passes = out.frequency <= std::min(1.0, out.predicted_bound) + 3.0 * out.standard_error;
  out.dhat_passes = out.dhat_frequency <= std::min(1.0, out.dhat_bound) + 3.0 * se(out.dhat_bound);
  return out;
}

std::vector<Vec64> make_separated_means(std::size_t n, std::size_t components, double separation, Rng& rng) {
  if (n == 0 || components < 2) throw InvalidArgument("make_separated_means: need n >= 1 and M >= 2");
  if (!(separation > 0.0 && separation <= 1.0)) throw InvalidArgument("make_separated_means: separation must lie in (0, 1]");
  const double step = std::sqrt(separation);
  Vector base(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < base.size(); ++i) base[i] = 2.0 * rng.uniform() - 1.0;
  std::vector<Vec64> out{Vec64(base)};
  for (std::size_t j = 1; j < components; ++j) {
    Vector mu(base.size());
    for (Eigen::Index i = 0; i < base.size(); ++i) {
      // Move toward (and possibly past) zero by t in [sqrt(Delta), 1]; stays in [-1, 1].
      const double t = j == 1 ? step : step + (1.0 - step) * rng.uniform();
      mu[i] = base[i] >= 0.0 ? base[i] - t : base[i] + t;
    }
    out.emplace_back(mu);
  }
  return out;
}

GaussianMixturePrior confine_to_box(const GaussianMixturePrior& world, ImageShape shape, double box_fraction) {
  if (world.dim() != shape.size()) throw InvalidArgument("confine_to_box: shape does not match prior dimension");
  const LinearOperator outside = make_box_mask(shape, box_fraction);
  std::vector<Vec64> means;
  const Vector mu0 = world.mean(0);
  for (std::size_t j = 0; j < world.components(); ++j) {
    Vector mu = world.mean(j);
    for (std::size_t idx : outside.mask_indices()) mu[static_cast<Eigen::Index>(idx)] = mu0[static_cast<Eigen::Index>(idx)];
    means.emplace_back(mu);
  }
  return GaussianMixturePrior(world.weights(), std::move(means), world.tau2());
}

std::vector<BoxGapRow> box_gap_sweep(const GaussianMixturePrior& world, ImageShape shape, const BoxGapConfig& config,
                                     Rng& rng) {
  if (world.dim() != shape.size()) throw InvalidArgument("box_gap_sweep: shape does not match prior dimension");
  if (config.fractions.empty()) throw InvalidArgument("box_gap_sweep: no fractions");
  for (std::size_t i = 0; i < config.fractions.size(); ++i) {
    const double f = config.fractions[i];
    if (!(f >= 0.0 && f < 1.0)) throw InvalidArgument("box_gap_sweep: fractions must lie in [0, 1)");
    if (i > 0 && !(f > config.fractions[i - 1])) throw InvalidArgument("box_gap_sweep: fractions must increase");
  }
  if (config.trials == 0) throw InvalidArgument("box_gap_sweep: trials must be positive");
  const GaussianMixturePrior prior =
      config.confine_fraction > 0.0 ? confine_to_box(world, shape, config.confine_fraction) : world;
  std::vector<LinearOperator> ops;
  for (double f : config.fractions) {
    if (f == 0.0) {
      std::vector<std::size_t> all(shape.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      ops.push_back(LinearOperator::mask(OperatorKind::BoxMask, shape.size(), std::move(all), shape));
    } else {
      ops.push_back(make_box_mask(shape, f));
    }
  }
  std::vector<std::vector<double>> deltas(ops.size()), mse(ops.size());
  std::vector<std::size_t> flagged(ops.size(), 0);
  const auto n = shape.size();
  std::vector<double> weights = prior.weights();
  for (std::size_t t = 0; t < config.trials; ++t) {
    // Component by inverse CDF, then one full-length (xi, eps) shared across fractions.
    const double u = rng.uniform();
    std::size_t j = 0;
    for (double acc = weights[0]; acc <= u && j + 1 < weights.size(); acc += weights[++j]) {
    }
    const Vector x = prior.mean(j) + std::sqrt(prior.tau2(j)) * gaussian_eigen(rng, n);
    const Vector eps = config.sigma * gaussian_eigen(rng, n);
    for (std::size_t k = 0; k < ops.size(); ++k) {
      const Vector y = ops[k].apply(x + eps);
      const Observation obs(Vec64(y), ops[k], config.sigma);
      const ComponentScores sc = component_scores(prior, obs);
      std::vector<bool> exclude(prior.components());
      for (std::size_t c = 0; c < prior.components(); ++c) exclude[c] = !(prior.weight(c) > 0.0);
      const GapResult g = per_dim_gap(sc.ell, obs.m(), exclude);
      deltas[k].push_back(g.delta);
      const GapResult gs = per_dim_gap(sc.s, obs.m(), exclude);
      mse[k].push_back(gs.delta * 2.0 * (config.sigma * config.sigma + prior.tau2(gs.winner)));
      flagged[k] += !g.identifiable;
    }
  }
  std::vector<BoxGapRow> rows;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const MeanStd s = summarize(deltas[k]);
    BoxGapRow row;
    row.fraction = config.fractions[k];
    row.m = ops[k].output_dim();
    row.mean_delta = s.mean;
    row.se_delta = s.std / std::sqrt(static_cast<double>(deltas[k].size()));
    row.mean_mse_gap = summarize(mse[k]).mean;
    row.flagged = flagged[k];
    rows.push_back(row);
  }
  return rows;
}

}  // namespace weakprior
