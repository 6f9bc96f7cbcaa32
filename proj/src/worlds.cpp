// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/worlds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace weakprior {

void WorldConfig::validate() const {
  if (shape.size() == 0) throw InvalidArgument("world: empty shape");
  if (components == 0) throw InvalidArgument("world: need at least one component");
  if (!(tau > 0.0)) throw InvalidArgument("world: tau must be > 0");
  if (!(weight_ratio >= 1.0)) throw InvalidArgument("world: weight_ratio must be >= 1");
  if (!(detail_spread > 0.0)) throw InvalidArgument("world: detail_spread must be > 0");
  for (double p : detail_periods) {
    if (!(p >= 2.0)) throw InvalidArgument("world: detail periods must be >= 2 pixels");
  }
  if (base_amplitude + detail_amplitude + 4.0 * tau > 1.0) {
    throw InvalidArgument("world: amplitudes plus 4 tau must stay within the [-1, 1] pixel range");
  }
}

WorldConfig WorldConfig::bench() {
  WorldConfig c;
  c.tau = 0.03;
  c.detail_spread = 0.25;
  return c;
}

WorldConfig WorldConfig::failure() {
  WorldConfig c;
  c.tau = 0.05;
  c.detail_spread = 0.14;
  return c;
}

GaussianMixturePrior make_image_world(const WorldConfig& config, Rng& rng) {
  config.validate();
  const auto& s = config.shape;
  const double pi = std::numbers::pi;
  const double h = static_cast<double>(s.height), w = static_cast<double>(s.width);
  const double cy = 0.5 * (h - 1.0), cx = 0.5 * (w - 1.0);
  const double spread = config.detail_spread * std::min(h, w);

  // Smooth base: two low-frequency waves per channel.
  Vector base(static_cast<Eigen::Index>(s.size()));
  std::vector<double> bp(s.channels * 6);
  for (auto& v : bp) v = rng.uniform();
  for (std::size_t r = 0; r < s.height; ++r) {
    for (std::size_t c = 0; c < s.width; ++c) {
      for (std::size_t k = 0; k < s.channels; ++k) {
        const double* p = &bp[k * 6];
        const double a = std::cos(2 * pi * (p[0] * r / h + p[1] * c / w) + 2 * pi * p[2]);
        const double b = std::cos(2 * pi * ((1 - p[3]) * r / h - p[4] * c / w) + 2 * pi * p[5]);
        base[static_cast<Eigen::Index>(s.index(r, c, k))] = 0.5 * config.base_amplitude * (a + b);
      }
    }
  }

  std::vector<Vec64> means;
  for (std::size_t j = 0; j < config.components; ++j) {
    Vector mu = base;
    Vector detail = Vector::Zero(mu.size());
    for (double period : config.detail_periods) {
      for (std::size_t k = 0; k < s.channels; ++k) {
        const double theta = pi * rng.uniform();
        const double phase = 2 * pi * rng.uniform();
        const double amp = 2.0 * rng.uniform() - 1.0;
        const double fy = std::sin(theta) / period, fx = std::cos(theta) / period;
        for (std::size_t r = 0; r < s.height; ++r) {
          for (std::size_t c = 0; c < s.width; ++c) {
            const double dy = r - cy, dx = c - cx;
            const double env = std::exp(-(dy * dy + dx * dx) / (2 * spread * spread));
            detail[static_cast<Eigen::Index>(s.index(r, c, k))] +=
                amp * env * std::cos(2 * pi * (fy * r + fx * c) + phase);
          }
        }
      }
    }
    const double peak = detail.cwiseAbs().maxCoeff();
    if (peak > 0.0) mu += (config.detail_amplitude / peak) * detail;
    means.emplace_back(mu);
  }

  std::vector<double> weights(config.components, 1.0);
  if (config.components > 1) {
    for (std::size_t j = 0; j < config.components; ++j) {
      weights[j] = std::pow(config.weight_ratio, -static_cast<double>(j) / static_cast<double>(config.components - 1));
    }
  }
  return GaussianMixturePrior::from_unnormalized(weights, means, std::vector<double>(config.components, config.tau * config.tau));
}

std::string to_string(Mismatch m) {
  switch (m) {
    case Mismatch::Reverse:
      return "reverse";
    case Mismatch::Rotate:
      return "rotate";
    case Mismatch::Uniform:
      return "uniform";
  }
  return "reverse";
}

Mismatch mismatch_from_string(const std::string& name) {
  if (name == "reverse") return Mismatch::Reverse;
  if (name == "rotate") return Mismatch::Rotate;
  if (name == "uniform") return Mismatch::Uniform;
  throw InvalidArgument("unknown mismatch \"" + name + "\" (valid: reverse, rotate, uniform)");
}

GaussianMixturePrior mismatch_weights(const GaussianMixturePrior& prior, Mismatch kind) {
  const std::size_t mc = prior.components();
  std::vector<double> w(mc);
  for (std::size_t j = 0; j < mc; ++j) {
    switch (kind) {
      case Mismatch::Reverse:
        w[j] = prior.weight(mc - 1 - j);
        break;
      case Mismatch::Rotate:
        w[j] = prior.weight((j + 1) % mc);
        break;
      case Mismatch::Uniform:
        w[j] = 1.0 / static_cast<double>(mc);
        break;
    }
  }
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return prior.with_weights(w);
}

WorldDraw draw_from(const GaussianMixturePrior& prior, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t j = 0;
  for (; j + 1 < prior.components(); ++j) {
    acc += prior.weight(j);
    if (u < acc) break;
  }
  WorldDraw d;
  d.component = j;
  d.x = prior.mean(j) + std::sqrt(prior.tau2(j)) * gaussian_eigen(rng, prior.dim());
  return d;
}

}  // namespace weakprior
