// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "weakprior/config.hpp"
#include "weakprior/consistency.hpp"
#include "weakprior/experiments.hpp"
#include "weakprior/identifiability.hpp"
#include "weakprior/io.hpp"
#include "weakprior/solver.hpp"

namespace weakprior::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
  std::string command;
  Json config;  // as given, plus the resolved seed
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  fs::path out;
  std::vector<std::string> outputs;
  std::ostream* log = nullptr;

  void write(const std::string& name, const std::string& text) {
    io::write_text(out / name, text);
    outputs.push_back(name);
  }
  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }
};

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// JSON has no infinities; they are written as strings.
Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(format_number(v)); }

Vec64 load_signal_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() >= 4 && std::string(bytes.begin(), bytes.begin() + 4) == "WPL1") {
    return io::decode_image(bytes).pixels();
  }
  const auto vs = io::decode_vectors(bytes);
  if (vs.size() != 1) throw ConfigError(path.string() + ": expected exactly one WPV1 record");
  return vs.front();
}

Vec64 load_signal(const fs::path& path) {
  try {
    return load_signal_bytes(path, io::read_file(path));
  } catch (const FormatError& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_signal(Context& ctx, const std::string& stem, const Vector& x, const std::optional<ImageShape>& shape) {
  ctx.outputs.push_back(stem + ".wpv");
  io::save_vector(ctx.out / (stem + ".wpv"), Vec64(x));
  if (shape) {
    // Images must lie in the pixel range; the vector file keeps the raw values.
    ctx.outputs.push_back(stem + ".wpl");
    io::save_image(ctx.out / (stem + ".wpl"), ImageGrid(*shape, Vec64(Vector(x.cwiseMax(-1.0).cwiseMin(1.0)))));
  }
}

// ---- subcommands -----------------------------------------------------------

void cmd_posterior(Context& ctx) {
  const Section s(ctx.config, "",
                  {"seed", "prior", "operator", "sigma", "x_true", "y", "delta0", "grid_tv"});
  Rng rng(ctx.seed);
  Json prior_j = s.has("prior") ? s.raw("prior")
                                : Json{{"type", "explicit"},
                                       {"weights", {0.5, 0.3, 0.2}},
                                       {"means", {{-1.0, 0.0}, {1.0, 0.5}, {0.0, -1.0}}},
                                       {"tau2", 0.25}};
  Rng prior_rng = rng.split(0), op_rng = rng.split(1), data_rng = rng.split(2);
  const PriorSpec ps = build_prior(prior_j, "prior", prior_rng);
  const Json op_j = s.has("operator") ? s.raw("operator") : Json{{"kind", "identity"}};
  const LinearOperator op = build_operator(op_j, "operator", ps.prior.dim(), ps.shape, op_rng);
  const double sigma = s.number("sigma", 0.5);
  if (!(sigma >= 0.0)) throw ConfigError("sigma: must be >= 0");
  std::optional<std::size_t> true_component;
  std::optional<Observation> obs;
  if (s.has("y")) {
    const auto y = s.numbers("y", {});
    if (y.size() != op.output_dim()) throw ConfigError("y: expected " + std::to_string(op.output_dim()) + " values");
    obs.emplace(Vec64(y), op, sigma);
  } else {
    Vector x;
    if (s.has("x_true")) {
      const auto xv = s.numbers("x_true", {});
      if (xv.size() != ps.prior.dim()) throw ConfigError("x_true: expected " + std::to_string(ps.prior.dim()) + " values");
      x = Vec64(xv).values();
    } else {
      const WorldDraw d = draw_from(ps.prior, data_rng);
      x = d.x;
      true_component = d.component;
    }
    obs.emplace(observe(op, x, sigma, data_rng));
  }
  const PosteriorMixture post = exact_posterior(ps.prior, *obs);
  std::optional<double> delta0;
  if (s.has("delta0")) delta0 = s.number("delta0", 0.0);
  const CollapseReport rep = collapse_report(post, ps.prior, delta0, s.flag("grid_tv", false) && ps.prior.dim() <= 2);

  CsvTable comps({"component", "prior_weight", "posterior_weight", "log_posterior_weight", "score", "selection_score"});
  Json weights = Json::array();
  for (std::size_t j = 0; j < post.components(); ++j) {
    const auto ji = static_cast<Eigen::Index>(j);
    comps.row({num(j), num(ps.prior.weight(j)), num(post.weight(j)), num(post.log_weights[ji]), num(post.scores[ji]),
               num(post.selection_scores[ji])});
    weights.push_back(post.weight(j));
  }
  Json j{{"n", ps.prior.dim()},
         {"m", post.m},
         {"components", rep.components},
         {"winner", post.winner},
         {"delta", number_json(rep.delta)},
         {"delta0", number_json(rep.delta0)},
         {"identifiable", post.gap.identifiable},
         {"posterior_weights", weights},
         {"p_not_jstar", rep.p_not_jstar},
         {"log_p_not_jstar", number_json(rep.log_p_not_jstar)},
         {"bound", number_json(rep.bound)},
         {"log_bound", number_json(rep.log_bound)},
         {"tv_to_winner", rep.tv_to_winner},
         {"weight_ratio", rep.weight_ratio},
         {"assumption2_holds", rep.assumption2_holds},
         {"bound_holds", rep.bound_holds}};
  if (rep.grid_tv) j["grid_tv"] = *rep.grid_tv;
  if (true_component) j["true_component"] = *true_component;
  if (ps.prior.dim() <= 64) j["winner_mean"] = vec_json(post.means[post.winner]);
  ctx.write_json("posterior.json", j);
  ctx.write("components.csv", comps.str());
  *ctx.log << "winner " << post.winner << ", P(J != j*) = " << num(rep.p_not_jstar) << ", bound " << num(rep.bound)
           << "\n";
}

void cmd_gap_stats(Context& ctx) {
  const Section s(ctx.config, "", {"seed", "dataset", "keep_fraction", "sigma", "tau"});
  const Section d(s.raw("dataset"), "dataset", {"files", "world", "size", "label"});
  Rng rng(ctx.seed);
  std::vector<ImageGrid> items;
  if (d.has("files")) {
    for (const auto& f : d.texts("files", {})) items.push_back(io::load_image(f));
  } else {
    Rng wr = rng.split(0);
    const WorldConfig wc = parse_world(d.raw("world"), "dataset.world", WorldConfig::bench());
    const GaussianMixturePrior world = make_image_world(wc, wr);
    const std::size_t size = d.count("size", 32);
    for (std::size_t i = 0; i < size; ++i) {
      const Vector x = draw_from(world, wr).x.cwiseMax(-1.0).cwiseMin(1.0);
      items.emplace_back(wc.shape, Vec64(x));
    }
  }
  if (items.size() < 2) throw ConfigError("dataset: need at least two images");
  const SyntheticDataset ds(std::move(items), d.text("label", "synthetic"));
  const double keep = s.number("keep_fraction", 0.3);
  Rng run = rng.split(1);
  const GapStats g = dataset_gap_stats(ds, keep, s.number("sigma", 0.01), s.number("tau", 0.05), run, ctx.threads);
  CsvTable t({"image", "gap", "mse_gap", "winner"});
  for (std::size_t i = 0; i < g.gaps.size(); ++i) t.row({num(i), num(g.gaps[i]), num(g.mse_gaps[i]), num(g.winners[i])});
  ctx.write("gaps.csv", t.str());
  ctx.write_json("gap_stats.json", Json{{"label", g.label},
                                        {"images", g.gaps.size()},
                                        {"keep_fraction", g.keep_fraction},
                                        {"mean", g.mean},
                                        {"std", g.std},
                                        {"min", g.min},
                                        {"mse_mean", g.mse_mean},
                                        {"self_win_rate", g.self_win_rate},
                                        {"flagged", g.flagged}});
  *ctx.log << "gap mean " << num(g.mean) << " (std " << num(g.std) << "), min " << num(g.min) << "\n";
}

void cmd_hoeffding(Context& ctx) {
  const Section s(ctx.config, "",
                  {"seed", "n", "m", "components", "separation", "sigma", "tau", "trials", "jstar"});
  Rng rng(ctx.seed);
  const std::size_t n = s.count("n", 256), m = s.count("m", 32), mc = s.count("components", 2);
  Rng mr = rng.split(0), tr = rng.split(1);
  const auto means = make_separated_means(n, mc, s.number("separation", 0.5), mr);
  const HoeffdingCheck h = hoeffding_validate(means, s.count("jstar", 0), m, s.number("sigma", 0.1),
                                              s.number("tau", 0.1), s.count("trials", 100000), tr, ctx.threads);
  CsvTable t({"m", "components", "separation", "trials", "failures", "frequency", "standard_error", "predicted_bound",
              "mask_bound", "noise_bound", "passes"});
  t.row({num(h.m), num(h.components), num(h.separation), num(h.trials), num(h.failures), num(h.frequency),
         num(h.standard_error), num(h.predicted_bound), num(h.mask_bound), num(h.noise_bound), h.passes ? "1" : "0"});
  ctx.write("hoeffding.csv", t.str());
  ctx.write_json("hoeffding.json", Json{{"n", h.n},
                                        {"m", h.m},
                                        {"components", h.components},
                                        {"jstar", h.jstar},
                                        {"separation", h.separation},
                                        {"threshold", h.threshold},
                                        {"sigma", h.sigma},
                                        {"tau", h.tau},
                                        {"trials", h.trials},
                                        {"failures", h.failures},
                                        {"frequency", h.frequency},
                                        {"standard_error", h.standard_error},
                                        {"predicted_bound", h.predicted_bound},
                                        {"mask_bound", h.mask_bound},
                                        {"noise_bound", h.noise_bound},
                                        {"noise_bound_a4", h.noise_bound_a4},
                                        {"passes", h.passes},
                                        {"dhat_frequency", h.dhat_frequency},
                                        {"dhat_bound", h.dhat_bound},
                                        {"dhat_passes", h.dhat_passes}});
  *ctx.log << "failure frequency " << num(h.frequency) << " vs bound " << num(h.predicted_bound)
           << (h.passes ? " (pass)" : " (FAIL)") << "\n";
}

void cmd_collapse_sweep(Context& ctx) {
  const Section s(ctx.config, "", {"seed", "m_values", "separation", "sigma", "tau", "trials_per_m"});
  CollapseSweepConfig c;
  c.m_values = s.counts("m_values", c.m_values);
  c.separation = s.number("separation", c.separation);
  c.sigma = s.number("sigma", c.sigma);
  c.tau = s.number("tau", c.tau);
  c.trials_per_m = s.count("trials_per_m", c.trials_per_m);
  if (c.m_values.empty()) throw ConfigError("m_values: must not be empty");
  Rng rng(ctx.seed);
  const CollapseSweepResult r = collapse_m_sweep(c, rng);
  CsvTable t({"m", "delta", "measured_p", "bound", "log_measured_p", "log_bound", "within_bound"});
  std::size_t violations = 0;
  for (const auto& row : r.rows) {
    const bool ok = row.log_p_not_jstar <= row.log_bound;
    violations += !ok;
    t.row({num(row.m), num(row.delta), num(row.p_not_jstar), num(row.bound), num(row.log_p_not_jstar),
           num(row.log_bound), ok ? "1" : "0"});
  }
  ctx.write("collapse_sweep.csv", t.str());
  ctx.write_json("collapse_sweep.json", Json{{"fitted_slope", r.fitted_slope},
                                             {"mean_delta", r.mean_delta},
                                             {"rows", r.rows.size()},
                                             {"violations", violations}});
  *ctx.log << "slope " << num(r.fitted_slope) << " vs -delta " << num(-r.mean_delta) << ", " << violations
           << " bound violations\n";
}

void cmd_consistency(Context& ctx) {
  const Section s(ctx.config, "", {"seed", "n_values", "ball_radius", "mc_samples"});
  Rng rng(ctx.seed);
  ConsistencyPreset p = make_consistency_preset(rng);
  p.config.n_values = s.counts("n_values", p.config.n_values);
  if (s.has("ball_radius")) p.config.ball_radius = s.number("ball_radius", 0.0);
  p.config.mc_samples = s.count("mc_samples", p.config.mc_samples);
  p.config.threads = ctx.threads;
  for (std::size_t i = 1; i < p.config.n_values.size(); ++i) {
    if (p.config.n_values[i] <= p.config.n_values[i - 1]) throw ConfigError("n_values: must be strictly increasing");
  }
  const ConsistencyResult r = consistency_sweep(p.prior_a, p.prior_b, p.x_star, p.op, p.sigma, p.config, rng);
  CsvTable t({"N", "mass_A", "se_A", "mass_B", "se_B", "winner_A", "winner_B"});
  for (const auto& row : r.rows) {
    t.row({num(row.n_obs), num(row.mass_a), num(row.se_a), num(row.mass_b), num(row.se_b), num(row.winner_a),
           num(row.winner_b)});
  }
  ctx.write("consistency.csv", t.str());
  ctx.write_json("consistency.json", Json{{"ball_radius", r.ball_radius},
                                          {"x_star", vec_json(p.x_star)},
                                          {"sigma", p.sigma},
                                          {"final_mass_A", r.rows.back().mass_a},
                                          {"final_mass_B", r.rows.back().mass_b}});
  *ctx.log << "mass at N = " << r.rows.back().n_obs << ": " << num(r.rows.back().mass_a) << " / "
           << num(r.rows.back().mass_b) << "\n";
}

void cmd_solve(Context& ctx) {
  const Section s(ctx.config, "",
                  {"seed", "prior", "generator", "operator", "sigma", "method", "solver", "dps", "x_file", "y_file"});
  const Section g(s.raw("generator"), "generator", {"steps", "mismatch", "schedule"});
  const Section sch(g.raw("schedule"), "generator.schedule", {"T", "beta_start", "beta_end"});
  Rng rng(ctx.seed);
  Rng prior_rng = rng.split(0), truth_rng = rng.split(1), op_rng = rng.split(2), noise_rng = rng.split(3),
      solve_rng = rng.split(4);
  const Json prior_j = s.has("prior") ? s.raw("prior") : Json{{"type", "image_world"}, {"preset", "bench"}};
  const PriorSpec ps = build_prior(prior_j, "prior", prior_rng);
  const std::size_t n = ps.prior.dim();
  const Json op_j = s.has("operator") ? s.raw("operator") : Json{{"kind", "random_mask"}, {"keep_fraction", 0.3}};
  const LinearOperator op = build_operator(op_j, "operator", n, ps.shape, op_rng);
  const double sigma = s.number("sigma", 0.01);

  std::optional<Vector> truth;
  std::optional<std::size_t> true_component;
  if (s.has("x_file")) {
    truth = load_signal(s.text("x_file", "")).values();
    if (static_cast<std::size_t>(truth->size()) != n) throw ConfigError("x_file: length does not match the prior");
  } else if (!s.has("y_file")) {
    const WorldDraw d = draw_from(ps.prior, truth_rng);
    truth = d.x;
    true_component = d.component;
  }
  std::optional<Observation> obs;
  if (s.has("y_file")) {
    const Vec64 y = load_signal(s.text("y_file", ""));
    if (y.size() != op.output_dim()) throw ConfigError("y_file: expected " + std::to_string(op.output_dim()) + " values");
    obs.emplace(y, op, sigma);
  } else {
    obs.emplace(observe(op, *truth, sigma, noise_rng));
  }

  const std::size_t steps = g.count("steps", 3);
  GaussianMixturePrior gen_prior = ps.prior;
  std::string mismatch = g.text("mismatch", "none");
  if (mismatch != "none") {
    try {
      gen_prior = mismatch_weights(ps.prior, mismatch_from_string(mismatch));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("generator.mismatch: ") + e.what());
    }
  }
  NoiseSchedule schedule = NoiseSchedule::linear(sch.count("T", 1000), sch.number("beta_start", 1e-4),
                                                 sch.number("beta_end", 2e-2));
  if (steps == 0 || steps > schedule.steps()) throw ConfigError("generator.steps: must lie in [1, T]");
  const DdimGenerator gen(std::move(schedule), gen_prior, steps);

  const std::string method = s.text("method", "latent");
  std::optional<MetricReference> ref;
  if (truth) ref = MetricReference{*truth, ps.shape, 2.0};
  SolveResult res;
  if (method == "latent") {
    SolveConfig sc = parse_solve_config(s.raw("solver"), "solver");
    if (!ref) sc.metrics.clear();
    res = solve_latent(gen, *obs, sc, solve_rng, ref ? &*ref : nullptr);
  } else if (method == "dps") {
    DpsConfig dc = parse_dps(s.raw("dps"), "dps");
    if (!ref) dc.metrics.clear();
    res = dps_baseline(gen, *obs, dc, solve_rng, ref ? &*ref : nullptr);
  } else {
    throw ConfigError("method: unknown method '" + method + "' (valid: latent, dps)");
  }

  Json metrics = Json::object();
  for (const auto& [k, v] : res.metrics) metrics[k] = number_json(v);
  Json j{{"method", method},
         {"n", n},
         {"m", obs->m()},
         {"generator_steps", steps},
         {"selected_step", res.selected_step},
         {"metrics", metrics},
         {"mode", nearest_mean(ps.prior, res.x_hat)}};
  if (true_component) j["true_component"] = *true_component;
  if (res.z_hat.size() > 0) j["z_norm"] = res.z_hat.norm();
  ctx.write_json("result.json", j);
  if (!res.trace.empty()) {
    CsvTable t({"step", "fit_mse", "holdout_mse", "z_norm"});
    for (const auto& r : res.trace) t.row({num(r.step), num(r.fit_mse), num(r.holdout_mse), num(r.z_norm)});
    ctx.write("trace.csv", t.str());
  }
  save_signal(ctx, "x_hat", res.x_hat, ps.shape);
  if (!s.has("y_file")) {
    io::save_vector(ctx.out / "y.wpv", obs->y);
    ctx.outputs.push_back("y.wpv");
  }
  *ctx.log << method << ": selected step " << res.selected_step;
  for (const auto& [k, v] : res.metrics) *ctx.log << ", " << k << " " << num(v);
  *ctx.log << "\n";
}

void cmd_bench(Context& ctx) {
  BenchConfig c = parse_bench(ctx.config);
  c.run.threads = ctx.threads;
  const auto rows = bench(c);
  CsvTable t({"task", "prior", "psnr", "ssim", "psnr_se"});
  for (const auto& r : rows) t.row({r.task, r.prior, num(r.psnr), num(r.ssim), num(r.psnr_se)});
  ctx.write("bench.csv", t.str());
  for (const auto& r : rows) *ctx.log << r.task << " " << r.prior << " " << num(r.psnr) << "\n";
}

void cmd_failure_sweep(Context& ctx) {
  FailureSweepConfig c = parse_failure_sweep(ctx.config);
  c.run.threads = ctx.threads;
  const FailureSweepResult r = failure_sweep(c);
  CsvTable t({"family", "param", "m", "mean_delta", "mean_delta_m", "psnr_matched", "psnr_mismatched", "psnr_gap",
              "psnr_gap_se", "mode_agreement"});
  auto add = [&](const SweepRow& row) {
    t.row({row.task.kind, num(row.task.param), num(row.m), num(row.mean_delta),
           num(row.mean_delta * static_cast<double>(row.m)), num(row.mean_psnr_matched), num(row.mean_psnr_mismatched),
           num(row.mean_gap), num(row.se_gap), num(row.agreement)});
  };
  bool delta_down = true, gap_up = true, sr_up = true;
  for (std::size_t i = 0; i < r.box.size(); ++i) {
    add(r.box[i]);
    if (i) {
      delta_down = delta_down && r.box[i].mean_delta <= r.box[i - 1].mean_delta;
      gap_up = gap_up && r.box[i].mean_gap >= r.box[i - 1].mean_gap;
    }
  }
  for (std::size_t i = 0; i < r.sr.size(); ++i) {
    add(r.sr[i]);
    if (i) sr_up = sr_up && r.sr[i].mean_gap > r.sr[i - 1].mean_gap;
  }
  ctx.write("failure_sweep.csv", t.str());
  ctx.write_json("failure_sweep.json", Json{{"spearman_box_gap", r.spearman_box_gap},
                                            {"box_delta_nonincreasing", delta_down},
                                            {"box_gap_nondecreasing", gap_up},
                                            {"sr_gap_increasing", sr_up}});
  *ctx.log << "box gap rank correlation " << num(r.spearman_box_gap) << "\n";
}

void cmd_robustness(Context& ctx) {
  RobustnessSetup c = parse_robustness(ctx.config);
  c.run.threads = ctx.threads;
  const RobustnessResult r = robustness_experiment(c.run, c.margin, c.task);
  CsvTable t({"world", "true_component", "posterior_winner", "m", "delta_m", "log_cm", "mode_matched",
              "mode_mismatched", "psnr_matched", "psnr_mismatched", "ssim_matched", "ssim_mismatched"});
  for (const auto& row : r.rows) {
    t.row({num(row.world), num(row.true_component), num(row.posterior_winner), num(row.m),
           num(row.delta * static_cast<double>(row.m)), num(row.log_cm), num(row.mode_matched),
           num(row.mode_mismatched), num(row.psnr_matched), num(row.psnr_mismatched), num(row.ssim_matched),
           num(row.ssim_mismatched)});
  }
  ctx.write("robustness.csv", t.str());
  ctx.write_json("robustness.json", Json{{"worlds", r.rows.size()},
                                         {"rejected", r.rejected},
                                         {"mode_agreement", r.agreement},
                                         {"median_abs_psnr_diff", r.median_abs_psnr_diff},
                                         {"median_psnr_matched", r.median_psnr_matched},
                                         {"median_psnr_mismatched", r.median_psnr_mismatched}});
  *ctx.log << "mode agreement " << num(r.agreement) << ", median |dPSNR| " << num(r.median_abs_psnr_diff) << "\n";
}

struct Command {
  const char* name;
  const char* help;
  std::uint64_t default_seed;
  void (*fn)(Context&);
};

const Command kCommands[] = {
    {"posterior", "exact mixture posterior and collapse report for one observation", 1, cmd_posterior},
    {"gap-stats", "per-image inpainting score gaps over a dataset", 1, cmd_gap_stats},
    {"hoeffding", "Monte Carlo check of the identifiability failure bound", 1, cmd_hoeffding},
    {"collapse-sweep", "measured P(J != j*) against the collapse bound over m", 1, cmd_collapse_sweep},
    {"consistency", "ball-mass curves of two priors as i.i.d. observations accumulate", kDefaultConsistencySeed,
     cmd_consistency},
    {"solve", "single inverse problem by latent optimization or guided sampling", 1, cmd_solve},
    {"bench", "matched / mismatched / guided-sampling grid over tasks", 1, cmd_bench},
    {"failure-sweep", "box fraction and super-resolution factor sweeps", 1, cmd_failure_sweep},
    {"robustness", "matched versus mismatched weights on identifiable worlds", 1, cmd_robustness},
};

std::size_t env_threads() {
  const char* v = std::getenv("WEAKPRIOR_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const unsigned long long t = std::strtoull(v, &end, 10);
  if (*end != '\0' || t == 0) throw ConfigError(std::string("WEAKPRIOR_THREADS: expected a positive integer, got '") + v + "'");
  return static_cast<std::size_t>(t);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"weakprior: desk-scale experiments on inverse problems with Gaussian-mixture priors", "weakprior"};
  app.set_version_flag("--version", WEAKPRIOR_VERSION);
  app.require_subcommand(1, 1);

  struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::optional<std::size_t> threads;
  };
  std::map<std::string, Flags> flags;
  for (const auto& c : kCommands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    Flags& f = flags[c.name];
    sub->add_option("--config", f.config, "JSON config file (defaults apply when omitted)");
    sub->add_option("--seed", f.seed, "base seed; overrides the config's seed");
    sub->add_option("--out", f.out, "output directory")->capture_default_str();
    sub->add_option("--threads", f.threads, "worker threads (fallback: WEAKPRIOR_THREADS, then 1)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  const Command* cmd = nullptr;
  for (const auto& c : kCommands) {
    if (app.got_subcommand(c.name)) cmd = &c;
  }
  const Flags& f = flags.at(cmd->name);
  Context ctx;
  ctx.command = cmd->name;
  ctx.log = &out;
  try {
    ctx.config = f.config.empty() ? Json::object() : load_json(f.config);
    if (!ctx.config.is_object()) throw ConfigError("config: expected a JSON object");
    ctx.seed = cmd->default_seed;
    if (ctx.config.contains("seed")) {
      const Json& sj = ctx.config["seed"];
      if (!sj.is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
      ctx.seed = sj.get<std::uint64_t>();
    }
    if (f.seed) ctx.seed = *f.seed;
    ctx.config["seed"] = ctx.seed;
    ctx.threads = f.threads ? *f.threads : env_threads();
    ctx.out = f.out;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    fs::create_directories(ctx.out);
    cmd->fn(ctx);
    Json manifest{{"command", ctx.command},
                  {"seed", ctx.seed},
                  {"config_hash", fnv1a_hex(ctx.config.dump())},
                  {"config", ctx.config},
                  {"outputs", ctx.outputs},
                  {"versions",
                   {{"weakprior", WEAKPRIOR_VERSION},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                    {"cli11", CLI11_VERSION}}}};
    io::write_text(ctx.out / "manifest.json", manifest.dump(2) + "\n");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kOk;
}

}  // namespace weakprior::cli
