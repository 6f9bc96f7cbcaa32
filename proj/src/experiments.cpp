// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "weakprior/parallel.hpp"

namespace weakprior {

std::string TaskSpec::label() const {
  char buf[64];
  if (kind == "sr") {
    std::snprintf(buf, sizeof buf, "sr_x%lld", static_cast<long long>(std::llround(param)));
  } else {
    std::snprintf(buf, sizeof buf, "%s_%.3g", kind.c_str(), param);
  }
  return buf;
}

void TaskSpec::validate() const {
  if (kind == "inpaint" || kind == "box") {
    if (!(param > 0.0 && param < 1.0)) throw InvalidArgument("task " + kind + ": param must lie in (0, 1)");
  } else if (kind == "sr") {
    if (!(param >= 1.0) || std::abs(param - std::round(param)) > 0) {
      throw InvalidArgument("task sr: param must be a positive integer factor");
    }
  } else if (kind == "blur") {
    if (!(param > 0.0)) throw InvalidArgument("task blur: param (kernel std) must be positive");
    if (kernel_size % 2 == 0) throw InvalidArgument("task blur: kernel_size must be odd");
  } else {
    throw InvalidArgument("unknown task kind '" + kind + "' (valid: inpaint, box, sr, blur)");
  }
}

LinearOperator make_task_operator(const TaskSpec& task, ImageShape shape, Rng& rng) {
  task.validate();
  if (task.kind == "inpaint") return make_random_mask(shape, task.param, rng);
  if (task.kind == "box") return make_box_mask(shape, task.param);
  if (task.kind == "sr") return make_block_average(shape, static_cast<std::size_t>(std::llround(task.param)));
  return make_gaussian_blur(shape, task.kernel_size, task.param);
}

SolveConfig task_solve_config(const TaskSpec& task) {
  task.validate();
  SolveConfig cfg;
  if (task.kind == "sr") {
    cfg.optimizer.learning_rate = 0.01;
    cfg.holdout.fraction = 0.05;
  } else if (task.kind == "blur") {
    cfg.holdout.fraction = 0.2;
  }
  return cfg;
}

namespace {

struct Instance {
  GaussianMixturePrior world;
  WorldDraw draw;
  Observation obs;
  GapResult gap;
  double log_cm = 0.0;
};

Instance make_instance(const GaussianMixturePrior& world, const WorldDraw& draw, const TaskSpec& task,
                       ImageShape shape, double sigma, Rng& rng) {
  const LinearOperator op = make_task_operator(task, shape, rng);
  Observation obs = observe(op, draw.x, sigma, rng);
  const ComponentScores sc = component_scores(world, obs);
  std::vector<bool> exclude(world.components());
  for (std::size_t j = 0; j < exclude.size(); ++j) exclude[j] = world.weight(j) == 0.0;
  const GapResult gap = per_dim_gap(sc.ell, obs.m(), exclude);
  const double log_cm =
      std::log(world.weight_ratio_bound() * static_cast<double>(world.active_components()));
  return Instance{world, draw, std::move(obs), gap, log_cm};
}

PairOutcome solve_instance(const Instance& inst, const TaskSpec& task, const WorldRunConfig& config,
                           std::uint64_t solve_seed) {
  const DdimGenerator matched(NoiseSchedule::linear(), inst.world, config.generator_steps);
  const DdimGenerator weak(NoiseSchedule::linear(), mismatch_weights(inst.world, config.mismatch),
                           config.generator_steps);
  SolveConfig cfg = task_solve_config(task);
  cfg.iterations = config.iterations;
  const MetricReference ref{inst.draw.x, config.world.shape, 2.0};
  // Both solves start from the same z0.
  Rng ra(solve_seed), rb(solve_seed);
  const SolveResult a = solve_latent(matched, inst.obs, cfg, ra, &ref);
  const SolveResult b = solve_latent(weak, inst.obs, cfg, rb, &ref);
  PairOutcome out;
  out.true_component = inst.draw.component;
  out.posterior_winner = inst.gap.winner;
  out.m = inst.obs.m();
  out.delta = inst.gap.delta;
  out.log_cm = inst.log_cm;
  out.mode_matched = nearest_mean(inst.world, a.x_hat);
  out.mode_mismatched = nearest_mean(inst.world, b.x_hat);
  out.psnr_matched = a.metrics.at("psnr");
  out.psnr_mismatched = b.metrics.at("psnr");
  out.ssim_matched = a.metrics.at("ssim");
  out.ssim_mismatched = b.metrics.at("ssim");
  return out;
}

void check_run(const WorldRunConfig& c) {
  c.world.validate();
  if (c.worlds == 0) throw InvalidArgument("worlds must be positive");
  if (!(c.sigma >= 0.0) || !std::isfinite(c.sigma)) throw InvalidArgument("sigma must be finite and >= 0");
  if (c.generator_steps == 0) throw InvalidArgument("generator_steps must be positive");
  if (c.iterations == 0) throw InvalidArgument("iterations must be positive");
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  if (v.empty()) return r;
  const double n = static_cast<double>(v.size());
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

// World w and its image depend only on (seed, w).
std::pair<GaussianMixturePrior, WorldDraw> world_for(const WorldRunConfig& c, std::size_t w, Rng& rng_out) {
  rng_out = Rng(c.seed).split(w);
  GaussianMixturePrior world = make_image_world(c.world, rng_out);
  WorldDraw d = draw_from(world, rng_out);
  return {std::move(world), std::move(d)};
}

}  // namespace

PairOutcome run_pair(const GaussianMixturePrior& world, const Vector& x_true, std::size_t true_component,
                     const TaskSpec& task, const WorldRunConfig& config, Rng& rng) {
  check_run(config);
  const Instance inst = make_instance(world, WorldDraw{x_true, true_component}, task, config.world.shape,
                                      config.sigma, rng);
  return solve_instance(inst, task, config, rng.next_u64());
}

RobustnessResult robustness_experiment(const WorldRunConfig& config, double margin, const TaskSpec& task) {
  check_run(config);
  std::vector<Instance> accepted;
  std::vector<std::size_t> ids;
  RobustnessResult res;
  const std::size_t max_candidates = 50 * config.worlds;
  for (std::size_t w = 0; accepted.size() < config.worlds; ++w) {
    if (w == max_candidates) {
      throw DegenerateModel("robustness_experiment: fewer than " + std::to_string(config.worlds) +
                            " identifiable worlds in " + std::to_string(max_candidates) + " candidates");
    }
    Rng rng(0);
    auto [world, draw] = world_for(config, w, rng);
    Instance inst = make_instance(world, draw, task, config.world.shape, config.sigma, rng);
    if (inst.gap.identifiable && inst.gap.delta * static_cast<double>(inst.obs.m()) >= inst.log_cm + margin) {
      accepted.push_back(std::move(inst));
      ids.push_back(w);
    } else {
      ++res.rejected;
    }
  }
  res.rows.resize(accepted.size());
  parallel_for(accepted.size(), config.threads, [&](std::size_t i) {
    res.rows[i] = solve_instance(accepted[i], task, config, Rng(config.seed).split(ids[i]).split(1).next_u64());
    res.rows[i].world = ids[i];
  });
  std::size_t agree = 0;
  std::vector<double> diff, pm, pw;
  for (const auto& r : res.rows) {
    agree += r.mode_matched == r.mode_mismatched;
    diff.push_back(std::abs(r.psnr_matched - r.psnr_mismatched));
    pm.push_back(r.psnr_matched);
    pw.push_back(r.psnr_mismatched);
  }
  res.agreement = static_cast<double>(agree) / static_cast<double>(res.rows.size());
  res.median_abs_psnr_diff = median(diff);
  res.median_psnr_matched = median(pm);
  res.median_psnr_mismatched = median(pw);
  return res;
}

FailureSweepConfig FailureSweepConfig::defaults() {
  FailureSweepConfig c;
  c.run.world = WorldConfig::failure();
  c.run.worlds = 16;
  return c;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("spearman: need two equal-length series, n >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j);  // ties share the mean rank
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

FailureSweepResult failure_sweep(const FailureSweepConfig& config) {
  check_run(config.run);
  std::vector<TaskSpec> tasks;
  for (double f : config.box_fractions) tasks.push_back(TaskSpec{"box", f, 9});
  for (std::size_t f : config.sr_factors) tasks.push_back(TaskSpec{"sr", static_cast<double>(f), 9});
  for (const auto& t : tasks) t.validate();
  const std::size_t nw = config.run.worlds, nt = tasks.size();
  std::vector<PairOutcome> out(nw * nt);
  parallel_for(nw * nt, config.run.threads, [&](std::size_t i) {
    const std::size_t w = i / nt, t = i % nt;
    Rng rng(0);
    auto [world, draw] = world_for(config.run, w, rng);
    Rng task_rng = rng.split(1 + t);
    const Instance inst = make_instance(world, draw, tasks[t], config.run.world.shape, config.run.sigma, task_rng);
    // Same z0 for every task of a world.
    out[i] = solve_instance(inst, tasks[t], config.run, Rng(config.run.seed).split(w).split(0).next_u64());
    out[i].world = w;
  });
  FailureSweepResult res;
  for (std::size_t t = 0; t < nt; ++t) {
    SweepRow row;
    row.task = tasks[t];
    std::vector<double> delta, pm, pw, gap;
    std::size_t agree = 0;
    for (std::size_t w = 0; w < nw; ++w) {
      const auto& o = out[w * nt + t];
      row.m = o.m;
      delta.push_back(o.delta);
      pm.push_back(o.psnr_matched);
      pw.push_back(o.psnr_mismatched);
      gap.push_back(o.psnr_matched - o.psnr_mismatched);
      agree += o.mode_matched == o.mode_mismatched;
    }
    row.mean_delta = mean_se(delta).mean;
    row.mean_psnr_matched = mean_se(pm).mean;
    row.mean_psnr_mismatched = mean_se(pw).mean;
    const MeanSe g = mean_se(gap);
    row.mean_gap = g.mean;
    row.se_gap = g.se;
    row.agreement = static_cast<double>(agree) / static_cast<double>(nw);
    (tasks[t].kind == "box" ? res.box : res.sr).push_back(row);
  }
  if (res.box.size() >= 2) {
    std::vector<double> f, g;
    for (const auto& r : res.box) {
      f.push_back(r.task.param);
      g.push_back(r.mean_gap);
    }
    res.spearman_box_gap = spearman(f, g);
  }
  return res;
}

BenchConfig BenchConfig::defaults() {
  BenchConfig c;
  c.run.world = WorldConfig::bench();
  c.run.worlds = 8;
  c.tasks = {TaskSpec{"inpaint", 0.3, 9}, TaskSpec{"box", 0.5, 9}, TaskSpec{"sr", 2.0, 9},
             TaskSpec{"blur", 1.5, 9}};
  c.dps.zeta = 0.2;
  return c;
}

std::vector<BenchRow> bench(const BenchConfig& config) {
  check_run(config.run);
  if (config.tasks.empty()) throw InvalidArgument("bench: no tasks");
  for (const auto& t : config.tasks) t.validate();
  if (config.include_dps) {
    config.dps.validate();
    if (config.dps_steps == 0) throw InvalidArgument("bench: dps_steps must be positive");
  }
  const std::size_t nw = config.run.worlds, nt = config.tasks.size();
  struct Cell {
    PairOutcome pair;
    double dps_psnr = 0.0, dps_ssim = 0.0;
  };
  std::vector<Cell> out(nw * nt);
  parallel_for(nw * nt, config.run.threads, [&](std::size_t i) {
    const std::size_t w = i / nt, t = i % nt;
    Rng rng(0);
    auto [world, draw] = world_for(config.run, w, rng);
    Rng task_rng = rng.split(1 + t);
    const Instance inst =
        make_instance(world, draw, config.tasks[t], config.run.world.shape, config.run.sigma, task_rng);
    const Rng solve_base = Rng(config.run.seed).split(w).split(100 + t);
    out[i].pair = solve_instance(inst, config.tasks[t], config.run, solve_base.split(0).next_u64());
    if (config.include_dps) {
      const DdimGenerator full(NoiseSchedule::linear(), world, config.dps_steps);
      DpsConfig dc = config.dps;
      dc.metrics = {"psnr", "ssim"};
      const MetricReference ref{draw.x, config.run.world.shape, 2.0};
      Rng dr = solve_base.split(1);
      const SolveResult r = dps_baseline(full, inst.obs, dc, dr, &ref);
      out[i].dps_psnr = r.metrics.at("psnr");
      out[i].dps_ssim = r.metrics.at("ssim");
    }
  });
  std::vector<BenchRow> rows;
  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<double> p[3], s[3];
    for (std::size_t w = 0; w < nw; ++w) {
      const Cell& c = out[w * nt + t];
      p[0].push_back(c.pair.psnr_matched);
      s[0].push_back(c.pair.ssim_matched);
      p[1].push_back(c.pair.psnr_mismatched);
      s[1].push_back(c.pair.ssim_mismatched);
      p[2].push_back(c.dps_psnr);
      s[2].push_back(c.dps_ssim);
    }
    const char* names[3] = {"matched", "mismatched", "dps"};
    for (int k = 0; k < (config.include_dps ? 3 : 2); ++k) {
      const MeanSe ps = mean_se(p[k]);
      rows.push_back(BenchRow{config.tasks[t].label(), names[k], ps.mean, mean_se(s[k]).mean, ps.se});
    }
  }
  return rows;
}

DpsSanityConfig DpsSanityConfig::defaults() {
  DpsSanityConfig c;
  c.dps.zeta = 0.4;
  c.dps.rule = GuidanceRule::Constant;
  return c;
}

std::vector<DpsSanityRow> dps_sanity(const DpsSanityConfig& config) {
  if (config.dim == 0 || config.worlds == 0 || config.steps.empty()) {
    throw InvalidArgument("dps_sanity: dim, worlds and steps must be non-empty");
  }
  if (!(config.tau > 0.0) || !(config.sigma > 0.0)) throw InvalidArgument("dps_sanity: tau and sigma must be positive");
  config.dps.validate();
  const auto n = static_cast<Eigen::Index>(config.dim);
  std::vector<std::vector<double>> dist(config.steps.size());
  DpsConfig dc = config.dps;
  dc.metrics = {};
  for (std::size_t w = 0; w < config.worlds; ++w) {
    Rng rng = Rng(config.seed).split(w);
    Vector mu(n);
    for (Eigen::Index i = 0; i < n; ++i) mu[i] = 0.5 * (2.0 * rng.uniform() - 1.0);
    const auto prior = GaussianMixturePrior::homogeneous({1.0}, {Vec64(mu)}, config.tau * config.tau);
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian() / std::sqrt(static_cast<double>(n));
    const Vector x = mu + config.tau * gaussian_eigen(rng, config.dim);
    const Observation obs = observe(LinearOperator::dense(a), x, config.sigma, rng);
    const Vector pm = exact_posterior(prior, obs).means[0];
    for (std::size_t s = 0; s < config.steps.size(); ++s) {
      Rng run = Rng(config.seed).split(w).split(1);  // same initial noise at every step count
      const DdimGenerator g(NoiseSchedule::linear(), prior, config.steps[s]);
      dist[s].push_back((dps_baseline(g, obs, dc, run).x_hat - pm).norm());
    }
  }
  std::vector<DpsSanityRow> rows;
  for (std::size_t s = 0; s < config.steps.size(); ++s) {
    const MeanSe m = mean_se(dist[s]);
    rows.push_back(DpsSanityRow{config.steps[s], m.mean, m.se});
  }
  return rows;
}

}  // namespace weakprior
