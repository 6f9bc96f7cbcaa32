// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/mixture_posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "weakprior/numeric.hpp"

namespace weakprior {

// ---------------------------------------------------------------------------
// Prior

GaussianMixturePrior::GaussianMixturePrior(std::vector<double> weights, std::vector<Vec64> means,
                                           std::vector<double> tau2)
    : weights_(std::move(weights)), tau2_(std::move(tau2)) {
  const std::size_t m = weights_.size();
  if (m == 0) throw InvalidArgument("GaussianMixturePrior: no components");
  if (means.size() != m || tau2_.size() != m) {
    throw InvalidArgument("GaussianMixturePrior: weights, means and tau2 must have equal length");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("GaussianMixturePrior: weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InvalidArgument("GaussianMixturePrior: weights sum to " + std::to_string(sum) + ", expected 1");
  }
  for (double t : tau2_) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("GaussianMixturePrior: tau2 must be > 0");
  }
  const std::size_t n = means.front().size();
  if (n == 0) throw InvalidArgument("GaussianMixturePrior: zero-dimensional means");
  means_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    if (means[j].size() != n) throw InvalidArgument("GaussianMixturePrior: means must share one dimension");
    means_.col(static_cast<Eigen::Index>(j)) = means[j].values();
  }
}

GaussianMixturePrior GaussianMixturePrior::from_unnormalized(std::vector<double> weights, std::vector<Vec64> means,
                                                             std::vector<double> tau2) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0)) throw InvalidArgument("GaussianMixturePrior: weights must have positive sum");
  for (double& w : weights) w /= sum;
  return GaussianMixturePrior(std::move(weights), std::move(means), std::move(tau2));
}

GaussianMixturePrior GaussianMixturePrior::homogeneous(std::vector<double> weights, std::vector<Vec64> means,
                                                       double tau2) {
  std::vector<double> t(weights.size(), tau2);
  return GaussianMixturePrior(std::move(weights), std::move(means), std::move(t));
}

double GaussianMixturePrior::log_weight(std::size_t j) const {
  const double w = weights_.at(j);
  return w > 0.0 ? std::log(w) : -kInf;
}

std::vector<Vec64> GaussianMixturePrior::means() const {
  std::vector<Vec64> out;
  out.reserve(components());
  for (std::size_t j = 0; j < components(); ++j) out.emplace_back(mean(j));
  return out;
}

bool GaussianMixturePrior::is_homogeneous() const noexcept {
  return std::all_of(tau2_.begin(), tau2_.end(), [&](double t) { return t == tau2_.front(); });
}

std::size_t GaussianMixturePrior::active_components() const noexcept {
  return static_cast<std::size_t>(std::count_if(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; }));
}

double GaussianMixturePrior::weight_ratio_bound() const {
  double lo = kInf, hi = 0.0;
  for (double w : weights_) {
    if (w > 0.0) {
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
  }
  return hi / lo;
}

GaussianMixturePrior GaussianMixturePrior::with_weights(std::vector<double> weights) const {
  return GaussianMixturePrior(std::move(weights), means(), tau2_);
}

// ---------------------------------------------------------------------------
// Measurement-space covariances Sigma_j = sigma^2 I + tau_j^2 A A^T

namespace {

struct MeasurementCovariance {
  // Structured: Sigma = variance * I.
  double variance = 0.0;
  // Dense: Cholesky factor.
  std::optional<Eigen::LLT<Matrix>> llt;
  double logdet = 0.0;

  Vector solve(const Vector& r) const { return llt ? llt->solve(r) : Vector(r / variance); }
  double quad(const Vector& r) const {
    if (llt) {
      const Vector z = llt->matrixL().solve(r);
      return z.squaredNorm();
    }
    return r.squaredNorm() / variance;
  }
};

Eigen::LLT<Matrix> cholesky_with_jitter(Matrix s, bool noiseless, const char* what) {
  Eigen::LLT<Matrix> llt(s);
  if (noiseless) {
    // Without noise a rank-deficient A A^T leaves pivots at rounding level.
    const double scale = s.diagonal().maxCoeff();
    const bool ok = llt.info() == Eigen::Success &&
                    llt.matrixLLT().diagonal().array().square().minCoeff() > 1e-12 * scale;
    if (!ok) throw DegenerateModel(std::string(what) + ": singular covariance with zero noise");
    return llt;
  }
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * s.trace() / static_cast<double>(s.rows());
  s.diagonal().array() += jitter;
  llt.compute(s);
  if (llt.info() != Eigen::Success || !(jitter > 0.0)) {
    throw DegenerateModel(std::string(what) + ": covariance is singular even after jitter");
  }
  return llt;
}

std::vector<MeasurementCovariance> measurement_covariances(const GaussianMixturePrior& prior,
                                                           const Observation& obs, const AatStructure& aat) {
  const double s2 = obs.noise_sigma * obs.noise_sigma;
  const auto m = static_cast<double>(obs.m());
  std::vector<MeasurementCovariance> out(prior.components());
  for (std::size_t j = 0; j < prior.components(); ++j) {
    auto& mc = out[j];
    if (const auto* si = std::get_if<ScaledIdentity>(&aat)) {
      mc.variance = s2 + prior.tau2(j) * si->c;
      if (!(mc.variance > 0.0)) {
        throw DegenerateModel("measurement covariance of component " + std::to_string(j) + " is singular");
      }
      mc.logdet = m * std::log(mc.variance);
    } else {
      const Matrix& aat_m = std::get<DenseSpd>(aat).matrix;
      Matrix s = prior.tau2(j) * aat_m;
      s.diagonal().array() += s2;
      mc.llt = cholesky_with_jitter(std::move(s), s2 == 0.0, "component_scores");
      mc.logdet = 2.0 * mc.llt->matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
  }
  return out;
}

void check_dims(const GaussianMixturePrior& prior, const Observation& obs) {
  if (prior.dim() != obs.op.input_dim()) {
    throw InvalidArgument("prior dimension " + std::to_string(prior.dim()) + " does not match operator input " +
                          std::to_string(obs.op.input_dim()));
  }
}

std::vector<bool> zero_weight_mask(const GaussianMixturePrior& prior) {
  std::vector<bool> ex(prior.components());
  for (std::size_t j = 0; j < prior.components(); ++j) ex[j] = !(prior.weight(j) > 0.0);
  return ex;
}

ComponentScores scores_from(const GaussianMixturePrior& prior, const Observation& obs,
                            const std::vector<MeasurementCovariance>& covs, std::vector<Vector>* residuals) {
  const std::size_t mcount = prior.components();
  ComponentScores sc{Vector(static_cast<Eigen::Index>(mcount)), Vector(static_cast<Eigen::Index>(mcount)),
                     Vector(static_cast<Eigen::Index>(mcount))};
  for (std::size_t j = 0; j < mcount; ++j) {
    Vector r = obs.y.values() - obs.op.apply(prior.mean(j));
    const auto ji = static_cast<Eigen::Index>(j);
    sc.s[ji] = 0.5 * covs[j].quad(r);
    sc.logdet[ji] = covs[j].logdet;
    sc.ell[ji] = sc.s[ji] + 0.5 * covs[j].logdet;
    if (residuals) residuals->push_back(std::move(r));
  }
  return sc;
}

}  // namespace

ComponentScores component_scores(const GaussianMixturePrior& prior, const Observation& obs) {
  check_dims(prior, obs);
  const auto covs = measurement_covariances(prior, obs, obs.op.aat_structure());
  return scores_from(prior, obs, covs, nullptr);
}

GapResult per_dim_gap(const Vector& scores, std::size_t m, const std::vector<bool>& exclude) {
  if (scores.size() == 0) throw InvalidArgument("per_dim_gap: no scores");
  if (m == 0) throw InvalidArgument("per_dim_gap: m must be positive");
  GapResult g;
  bool have_best = false, have_second = false;
  double best = kInf, second = kInf;
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (!exclude.empty() && exclude[static_cast<std::size_t>(j)]) continue;
    const double s = scores[j];
    if (!have_best || s < best) {
      if (have_best) {
        second = best;
        g.runner_up = g.winner;
        have_second = true;
      }
      best = s;
      g.winner = static_cast<std::size_t>(j);
      have_best = true;
    } else if (!have_second || s < second) {
      second = s;
      g.runner_up = static_cast<std::size_t>(j);
      have_second = true;
    }
  }
  if (!have_best) throw InvalidArgument("per_dim_gap: every component excluded");
  if (!have_second) {
    g.single_component = true;
    g.delta = kInf;
    g.runner_up = g.winner;
    g.identifiable = true;
    return g;
  }
  const double md = static_cast<double>(m);
  g.delta = (second - best) / md;
  g.identifiable = (second - best) >= 1e-9 * md;
  return g;
}

// ---------------------------------------------------------------------------
// Posterior

double PosteriorMixture::weight(std::size_t j) const { return std::exp(log_weights[static_cast<Eigen::Index>(j)]); }

Matrix PosteriorMixture::covariance(std::size_t j) const {
  const auto& c = covariances.at(j);
  if (c.dense) return *c.dense;
  const Matrix a = op->to_dense();
  const auto n = a.cols();
  Matrix out = c.gram_scale * (a.transpose() * a);
  out.diagonal().array() += c.identity_scale;
  (void)n;
  return out;
}

double PosteriorMixture::log_density(const Vector& x) const {
  std::vector<double> terms;
  terms.reserve(components());
  const auto n = static_cast<double>(x.size());
  for (std::size_t j = 0; j < components(); ++j) {
    const double lw = log_weights[static_cast<Eigen::Index>(j)];
    if (lw == -kInf) continue;
    const Matrix c = covariance(j);
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() != Eigen::Success) throw DegenerateModel("log_density: component covariance not SPD");
    const Vector z = llt.matrixL().solve(x - means[j]);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    terms.push_back(lw - 0.5 * (n * kLog2Pi + logdet + z.squaredNorm()));
  }
  return log_sum_exp(terms);
}

PosteriorMixture exact_posterior(const GaussianMixturePrior& prior, const Observation& obs) {
  check_dims(prior, obs);
  if (!(obs.noise_sigma > 0.0)) throw DegenerateModel("exact_posterior: noise sigma must be > 0");
  const AatStructure aat = obs.op.aat_structure();
  const auto covs = measurement_covariances(prior, obs, aat);
  std::vector<Vector> residuals;
  const ComponentScores sc = scores_from(prior, obs, covs, &residuals);

  PosteriorMixture post;
  post.m = obs.m();
  post.scores = sc.s;
  post.selection_scores = sc.ell;
  const std::size_t mcount = prior.components();
  post.log_weights.resize(static_cast<Eigen::Index>(mcount));
  for (std::size_t j = 0; j < mcount; ++j) {
    post.log_weights[static_cast<Eigen::Index>(j)] = prior.log_weight(j) - sc.ell[static_cast<Eigen::Index>(j)];
  }
  normalize_log_weights(post.log_weights);
  post.gap = per_dim_gap(sc.ell, obs.m(), zero_weight_mask(prior));
  post.winner = post.gap.winner;

  const bool structured = std::holds_alternative<ScaledIdentity>(aat);
  std::optional<Matrix> a_dense;
  if (!structured) a_dense = obs.op.to_dense();
  for (std::size_t j = 0; j < mcount; ++j) {
    const double t2 = prior.tau2(j);
    const Vector sr = covs[j].solve(residuals[j]);
    post.means.push_back(prior.mean(j) + t2 * obs.op.adjoint(sr));
    ComponentCovariance cc;
    if (structured) {
      cc.identity_scale = t2;
      cc.gram_scale = -t2 * t2 / covs[j].variance;
    } else {
      const Matrix sa = covs[j].llt->solve(*a_dense);
      Matrix c = -t2 * t2 * (a_dense->transpose() * sa);
      c.diagonal().array() += t2;
      cc.dense = 0.5 * (c + c.transpose());
    }
    post.covariances.push_back(std::move(cc));
  }
  if (structured) post.op = obs.op;
  return post;
}

GaussianComponent information_form_component(const GaussianMixturePrior& prior, const Observation& obs,
                                             std::size_t j) {
  check_dims(prior, obs);
  if (!(obs.noise_sigma > 0.0)) throw DegenerateModel("information_form_component: noise sigma must be > 0");
  const Matrix a = obs.op.to_dense();
  const double s2 = obs.noise_sigma * obs.noise_sigma;
  const double t2 = prior.tau2(j);
  Matrix p = (a.transpose() * a) / s2;
  p.diagonal().array() += 1.0 / t2;
  Eigen::LLT<Matrix> llt(p);
  if (llt.info() != Eigen::Success) throw DegenerateModel("information_form_component: precision not SPD");
  const Vector h = prior.mean(j) / t2 + a.transpose() * obs.y.values() / s2;
  GaussianComponent out;
  out.mean = llt.solve(h);
  out.covariance = llt.solve(Matrix::Identity(p.rows(), p.cols()));
  return out;
}

// ---------------------------------------------------------------------------
// Collapse

CollapseReport collapse_report(const PosteriorMixture& posterior, const GaussianMixturePrior& prior,
                               std::optional<double> delta0, bool with_grid_tv) {
  CollapseReport rep;
  rep.m = posterior.m;
  rep.components = prior.active_components();
  rep.weight_ratio = prior.weight_ratio_bound();
  rep.winner = posterior.winner;
  rep.delta = posterior.gap.delta;
  rep.delta0 = delta0.value_or(posterior.gap.delta);
  rep.assumption2_holds = posterior.gap.identifiable && !(rep.delta0 > rep.delta);

  std::vector<double> others;
  for (std::size_t j = 0; j < posterior.components(); ++j) {
    if (j != posterior.winner) others.push_back(posterior.log_weights[static_cast<Eigen::Index>(j)]);
  }
  rep.log_p_not_jstar = log_sum_exp(others);
  rep.p_not_jstar = std::clamp(std::exp(rep.log_p_not_jstar), 0.0, 1.0);
  rep.tv_to_winner = rep.p_not_jstar;

  const auto md = static_cast<double>(rep.m);
  rep.log_bound = std::log(rep.weight_ratio) + std::log(static_cast<double>(rep.components)) - rep.delta0 * md;
  if (rep.delta0 == kInf) rep.log_bound = -kInf;
  rep.bound = std::exp(rep.log_bound);
  // Soundness is asserted only where the theorem applies (delta0 <= delta(y)).
  rep.bound_holds = !rep.assumption2_holds || rep.log_p_not_jstar <= rep.log_bound + 1e-9;

  if (with_grid_tv && prior.dim() <= 2) rep.grid_tv = grid_tv_to_winner(posterior);
  return rep;
}

CollapseReport collapse_report(const GaussianMixturePrior& prior, const Observation& obs,
                               std::optional<double> delta0, bool with_grid_tv) {
  return collapse_report(exact_posterior(prior, obs), prior, delta0, with_grid_tv);
}

double grid_tv_to_winner(const PosteriorMixture& posterior, std::size_t points_per_axis, double half_width_sds) {
  if (posterior.components() == 0) throw InvalidArgument("grid_tv_to_winner: empty posterior");
  const auto n = static_cast<std::size_t>(posterior.means.front().size());
  if (n > 2) throw InvalidArgument("grid_tv_to_winner: only n <= 2 supported");
  Vector lo = Vector::Constant(static_cast<Eigen::Index>(n), kInf);
  Vector hi = Vector::Constant(static_cast<Eigen::Index>(n), -kInf);
  std::vector<Matrix> covs;
  for (std::size_t j = 0; j < posterior.components(); ++j) covs.push_back(posterior.covariance(j));
  for (std::size_t j = 0; j < posterior.components(); ++j) {
    if (posterior.log_weights[static_cast<Eigen::Index>(j)] == -kInf) continue;
    for (std::size_t d = 0; d < n; ++d) {
      const auto di = static_cast<Eigen::Index>(d);
      const double sd = std::sqrt(covs[j](di, di));
      lo[di] = std::min(lo[di], posterior.means[j][di] - half_width_sds * sd);
      hi[di] = std::max(hi[di], posterior.means[j][di] + half_width_sds * sd);
    }
  }
  // Precompute Gaussian factors per component.
  struct Comp {
    double log_norm;
    Eigen::LLT<Matrix> llt;
    Vector mean;
  };
  std::vector<Comp> comps;
  std::vector<double> lws;
  for (std::size_t j = 0; j < posterior.components(); ++j) {
    Eigen::LLT<Matrix> llt(covs[j]);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    comps.push_back({-0.5 * (static_cast<double>(n) * kLog2Pi + logdet), llt, posterior.means[j]});
    lws.push_back(posterior.log_weights[static_cast<Eigen::Index>(j)]);
  }
  auto log_phi = [&](std::size_t j, const Vector& x) {
    const Vector z = comps[j].llt.matrixL().solve(x - comps[j].mean);
    return comps[j].log_norm - 0.5 * z.squaredNorm();
  };
  const std::size_t pts = points_per_axis;
  std::vector<double> h(n);
  for (std::size_t d = 0; d < n; ++d) h[d] = (hi[static_cast<Eigen::Index>(d)] - lo[static_cast<Eigen::Index>(d)]) / static_cast<double>(pts - 1);
  double total = 0.0;
  Vector x(static_cast<Eigen::Index>(n));
  std::vector<double> terms(posterior.components());
  const std::size_t count = n == 1 ? pts : pts * pts;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i0 = k % pts, i1 = k / pts;
    double wq = (i0 == 0 || i0 == pts - 1) ? 0.5 : 1.0;
    x[0] = lo[0] + static_cast<double>(i0) * h[0];
    if (n == 2) {
      x[1] = lo[1] + static_cast<double>(i1) * h[1];
      wq *= (i1 == 0 || i1 == pts - 1) ? 0.5 : 1.0;
    }
    for (std::size_t j = 0; j < comps.size(); ++j) terms[j] = lws[j] == -kInf ? -kInf : lws[j] + log_phi(j, x);
    const double p = std::exp(log_sum_exp(terms));
    const double q = std::exp(log_phi(posterior.winner, x));
    total += wq * std::abs(p - q);
  }
  double cell = 1.0;
  for (double hd : h) cell *= hd;
  return 0.5 * total * cell;
}

// ---------------------------------------------------------------------------
// i.i.d. stack

PosteriorMixture posterior_for_iid_stack(const GaussianMixturePrior& prior, const LinearOperator& op,
                                         const std::vector<Vec64>& y_list, double sigma) {
  if (y_list.empty()) throw InvalidArgument("posterior_for_iid_stack: empty observation list");
  if (!(sigma > 0.0)) throw DegenerateModel("posterior_for_iid_stack: sigma must be > 0");
  if (prior.dim() != op.input_dim()) throw InvalidArgument("posterior_for_iid_stack: prior/operator dimension mismatch");
  const auto mdim = op.output_dim();
  Vector ysum = Vector::Zero(static_cast<Eigen::Index>(mdim));
  double ysq = 0.0;
  for (const auto& y : y_list) {
    if (y.size() != mdim) throw InvalidArgument("posterior_for_iid_stack: observation length mismatch");
    ysum += y.values();
    ysq += y.values().squaredNorm();
  }
  const auto count = static_cast<double>(y_list.size());
  const Matrix a = op.to_dense();
  const Matrix gram = a.transpose() * a;
  const Vector b = a.transpose() * ysum;
  const double s2 = sigma * sigma;
  const auto n = static_cast<double>(prior.dim());
  const double nm = count * static_cast<double>(mdim);

  PosteriorMixture post;
  post.m = y_list.size() * mdim;
  const std::size_t mcount = prior.components();
  post.scores.resize(static_cast<Eigen::Index>(mcount));
  post.selection_scores.resize(static_cast<Eigen::Index>(mcount));
  post.log_weights.resize(static_cast<Eigen::Index>(mcount));
  for (std::size_t j = 0; j < mcount; ++j) {
    const double t2 = prior.tau2(j);
    const Vector mu = prior.mean(j);
    Matrix p = count * gram / s2;
    p.diagonal().array() += 1.0 / t2;
    Eigen::LLT<Matrix> llt(p);
    if (llt.info() != Eigen::Success) throw DegenerateModel("posterior_for_iid_stack: precision not SPD");
    // Work around mu_j: residual statistics of r_i = y_i - A mu_j.
    const Vector gmu = gram * mu;
    const double rsq = std::max(0.0, ysq - 2.0 * mu.dot(b) + count * mu.dot(gmu));
    const Vector h = (b - count * gmu) / s2;
    const Vector u = llt.solve(h);
    const double logdet_p = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    // -log p_j(y_stack) - (Nm/2) log 2 pi
    const double ell = 0.5 * nm * std::log(s2) + rsq / (2.0 * s2) + 0.5 * n * std::log(t2) - 0.5 * h.dot(u) +
                       0.5 * logdet_p;
    const double half_logdet_sigma = 0.5 * (nm * std::log(s2) + n * std::log(t2) + logdet_p);
    const auto ji = static_cast<Eigen::Index>(j);
    post.selection_scores[ji] = ell;
    post.scores[ji] = ell - half_logdet_sigma;
    post.log_weights[ji] = prior.log_weight(j) - ell;
    post.means.push_back(mu + u);
    ComponentCovariance cc;
    cc.dense = llt.solve(Matrix::Identity(p.rows(), p.cols()));
    post.covariances.push_back(std::move(cc));
  }
  normalize_log_weights(post.log_weights);
  post.gap = per_dim_gap(post.selection_scores, post.m, zero_weight_mask(prior));
  post.winner = post.gap.winner;
  return post;
}

// ---------------------------------------------------------------------------
// m-sweep

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("least_squares_slope: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw InvalidArgument("least_squares_slope: x has zero variance");
  return sxy / sxx;
}

CollapseSweepResult collapse_m_sweep(const CollapseSweepConfig& config, Rng& rng) {
  if (config.m_values.size() < 2) throw InvalidArgument("collapse_m_sweep: need at least two m values");
  CollapseSweepResult out;
  std::vector<double> xs, ys;
  double delta_sum = 0.0;
  for (std::size_t m : config.m_values) {
    if (m == 0) throw InvalidArgument("collapse_m_sweep: m must be positive");
    for (std::size_t trial = 0; trial < std::max<std::size_t>(1, config.trials_per_m); ++trial) {
      const ImageShape shape{2 * m, 1, 1};
      Vector mu0(static_cast<Eigen::Index>(shape.size()));
      Vector mu1(mu0.size());
      for (Eigen::Index i = 0; i < mu0.size(); ++i) {
        mu0[i] = rng.uniform() - 0.5;
        mu1[i] = mu0[i] + (rng.uniform() < 0.5 ? -1.0 : 1.0) * config.separation;
      }
      const auto prior = GaussianMixturePrior::homogeneous({0.5, 0.5}, {Vec64(mu0), Vec64(mu1)},
                                                           config.tau * config.tau);
      const LinearOperator op = make_random_mask(shape, 0.5, rng);
      Vector x = mu0;
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += config.tau * rng.gaussian();
      const Observation obs = observe(op, x, config.sigma, rng);
      const CollapseReport rep = collapse_report(prior, obs);
      CollapseSweepRow row{m, rep.delta, rep.p_not_jstar, rep.log_p_not_jstar, rep.bound, rep.log_bound};
      out.rows.push_back(row);
      xs.push_back(static_cast<double>(m));
      ys.push_back(rep.log_p_not_jstar);
      delta_sum += rep.delta;
    }
  }
  out.fitted_slope = least_squares_slope(xs, ys);
  out.mean_delta = delta_sum / static_cast<double>(out.rows.size());
  return out;
}

}  // namespace weakprior
