// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace weakprior {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

const Json& empty_object() {
  static const Json e = Json::object();
  return e;
}

}  // namespace

Section::Section(const Json& value, std::string path, std::initializer_list<const char*> keys)
    : value_(value.is_null() ? &empty_object() : &value), path_(std::move(path)) {
  if (!value_->is_object()) fail(path_.empty() ? "config" : path_, "expected a JSON object");
  std::vector<std::string> valid(keys.begin(), keys.end());
  for (const auto& item : value_->items()) {
    bool ok = false;
    for (const auto& k : valid) ok = ok || k == item.key();
    if (!ok) fail(where(item.key().c_str()), "unknown key (valid keys: " + join(valid) + ")");
  }
}

bool Section::has(const char* key) const { return value_->contains(key) && !(*value_)[key].is_null(); }

const Json& Section::raw(const char* key) const {
  if (!has(key)) return empty_object();
  return (*value_)[key];
}

double Section::number(const char* key, double fallback) const {
  if (!has(key)) return fallback;
  const Json& v = (*value_)[key];
  if (!v.is_number()) fail(where(key), "expected a number");
  return v.get<double>();
}

std::size_t Section::count(const char* key, std::size_t fallback) const {
  if (!has(key)) return fallback;
  const Json& v = (*value_)[key];
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(where(key), "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::uint64_t Section::u64(const char* key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const Json& v = (*value_)[key];
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    fail(where(key), "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool Section::flag(const char* key, bool fallback) const {
  if (!has(key)) return fallback;
  const Json& v = (*value_)[key];
  if (!v.is_boolean()) fail(where(key), "expected true or false");
  return v.get<bool>();
}

std::string Section::text(const char* key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  const Json& v = (*value_)[key];
  if (!v.is_string()) fail(where(key), "expected a string");
  return v.get<std::string>();
}

std::vector<double> Section::numbers(const char* key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  const Json& v = (*value_)[key];
  if (!v.is_array()) fail(where(key), "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(where(key), "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::size_t> Section::counts(const char* key, const std::vector<std::size_t>& fallback) const {
  if (!has(key)) return fallback;
  const Json& v = (*value_)[key];
  if (!v.is_array()) fail(where(key), "expected an array of non-negative integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<long long>() < 0) fail(where(key), "expected an array of non-negative integers");
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

std::vector<std::string> Section::texts(const char* key, const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  const Json& v = (*value_)[key];
  if (!v.is_array()) fail(where(key), "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) fail(where(key), "expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

ImageShape parse_shape(const Json& value, const std::string& path) {
  if (!value.is_array() || value.size() != 3) fail(path, "expected [height, width, channels]");
  ImageShape s;
  std::size_t d[3];
  for (std::size_t i = 0; i < 3; ++i) {
    if (!value[i].is_number_integer() || value[i].get<long long>() <= 0) fail(path, "dimensions must be positive integers");
    d[i] = value[i].get<std::size_t>();
  }
  s.height = d[0];
  s.width = d[1];
  s.channels = d[2];
  return s;
}

WorldConfig parse_world(const Json& value, const std::string& path, WorldConfig base) {
  const Section s(value, path,
                  {"preset", "shape", "components", "tau", "base_amplitude", "detail_amplitude", "detail_spread",
                   "detail_periods", "weight_ratio"});
  const std::string preset = s.text("preset", "");
  if (preset == "bench") {
    base = WorldConfig::bench();
  } else if (preset == "failure") {
    base = WorldConfig::failure();
  } else if (!preset.empty()) {
    fail(s.where("preset"), "unknown preset '" + preset + "' (valid: bench, failure)");
  }
  if (s.has("shape")) base.shape = parse_shape(s.raw("shape"), s.where("shape"));
  base.components = s.count("components", base.components);
  base.tau = s.number("tau", base.tau);
  base.base_amplitude = s.number("base_amplitude", base.base_amplitude);
  base.detail_amplitude = s.number("detail_amplitude", base.detail_amplitude);
  base.detail_spread = s.number("detail_spread", base.detail_spread);
  base.detail_periods = s.numbers("detail_periods", base.detail_periods);
  base.weight_ratio = s.number("weight_ratio", base.weight_ratio);
  try {
    base.validate();
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
  return base;
}

TaskSpec parse_task(const Json& value, const std::string& path) {
  const Section s(value, path, {"kind", "param", "kernel_size"});
  TaskSpec t;
  t.kind = s.text("kind", t.kind);
  t.param = s.number("param", t.param);
  t.kernel_size = s.count("kernel_size", t.kernel_size);
  try {
    t.validate();
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
  return t;
}

SolveConfig parse_solve_config(const Json& value, const std::string& path, SolveConfig base) {
  const Section s(value, path, {"optimizer", "holdout", "iterations", "metrics"});
  const Section o(s.raw("optimizer"), s.where("optimizer"),
                  {"learning_rate", "beta1", "beta2", "epsilon", "radius", "retraction"});
  auto& opt = base.optimizer;
  opt.learning_rate = o.number("learning_rate", opt.learning_rate);
  opt.beta1 = o.number("beta1", opt.beta1);
  opt.beta2 = o.number("beta2", opt.beta2);
  opt.epsilon = o.number("epsilon", opt.epsilon);
  if (o.has("radius")) opt.radius = o.number("radius", 0.0);
  if (o.has("retraction")) {
    try {
      opt.retraction = retraction_from_string(o.text("retraction", ""));
    } catch (const InvalidArgument& e) {
      fail(o.where("retraction"), e.what());
    }
  }
  const Section h(s.raw("holdout"), s.where("holdout"), {"fraction", "k", "seed"});
  base.holdout.fraction = h.number("fraction", base.holdout.fraction);
  base.holdout.k = h.count("k", base.holdout.k);
  base.holdout.seed = h.u64("seed", base.holdout.seed);
  base.iterations = s.count("iterations", base.iterations);
  base.metrics = s.texts("metrics", base.metrics);
  try {
    base.validate();
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
  return base;
}

DpsConfig parse_dps(const Json& value, const std::string& path, DpsConfig base) {
  const Section s(value, path, {"zeta", "rule", "eta", "metrics"});
  base.zeta = s.number("zeta", base.zeta);
  base.eta = s.number("eta", base.eta);
  base.metrics = s.texts("metrics", base.metrics);
  try {
    if (s.has("rule")) base.rule = guidance_rule_from_string(s.text("rule", ""));
    base.validate();
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
  return base;
}

void parse_world_run(const Section& s, WorldRunConfig& out) {
  out.world = parse_world(s.raw("world"), s.where("world"), out.world);
  out.worlds = s.count("worlds", out.worlds);
  out.seed = s.u64("seed", out.seed);
  out.sigma = s.number("sigma", out.sigma);
  out.generator_steps = s.count("generator_steps", out.generator_steps);
  out.iterations = s.count("iterations", out.iterations);
  if (s.has("mismatch")) {
    try {
      out.mismatch = mismatch_from_string(s.text("mismatch", ""));
    } catch (const InvalidArgument& e) {
      fail(s.where("mismatch"), e.what());
    }
  }
  if (out.worlds == 0) fail(s.where("worlds"), "must be positive");
  if (out.generator_steps == 0) fail(s.where("generator_steps"), "must be positive");
  if (out.iterations == 0) fail(s.where("iterations"), "must be positive");
  if (!(out.sigma >= 0.0)) fail(s.where("sigma"), "must be >= 0");
}

namespace {

#define WEAKPRIOR_RUN_KEYS "world", "worlds", "seed", "sigma", "generator_steps", "iterations", "mismatch"

}  // namespace

FailureSweepConfig parse_failure_sweep(const Json& value) {
  FailureSweepConfig c = FailureSweepConfig::defaults();
  const Section s(value, "", {WEAKPRIOR_RUN_KEYS, "box_fractions", "sr_factors"});
  parse_world_run(s, c.run);
  c.box_fractions = s.numbers("box_fractions", c.box_fractions);
  c.sr_factors = s.counts("sr_factors", c.sr_factors);
  for (double f : c.box_fractions) {
    if (!(f > 0.0 && f < 1.0)) fail("box_fractions", "entries must lie in (0, 1)");
  }
  for (std::size_t f : c.sr_factors) {
    if (f == 0 || c.run.world.shape.height % f || c.run.world.shape.width % f) {
      fail("sr_factors", "entries must be positive and divide the image sides");
    }
  }
  if (c.box_fractions.empty() && c.sr_factors.empty()) fail("config", "nothing to sweep");
  return c;
}

BenchConfig parse_bench(const Json& value) {
  BenchConfig c = BenchConfig::defaults();
  const Section s(value, "", {WEAKPRIOR_RUN_KEYS, "tasks", "include_dps", "dps", "dps_steps"});
  parse_world_run(s, c.run);
  if (s.has("tasks")) {
    const Json& t = s.raw("tasks");
    if (!t.is_array() || t.empty()) fail("tasks", "expected a non-empty array of task objects");
    c.tasks.clear();
    for (std::size_t i = 0; i < t.size(); ++i) c.tasks.push_back(parse_task(t[i], "tasks[" + std::to_string(i) + "]"));
  }
  c.include_dps = s.flag("include_dps", c.include_dps);
  c.dps = parse_dps(s.raw("dps"), "dps", c.dps);
  c.dps_steps = s.count("dps_steps", c.dps_steps);
  if (c.dps_steps == 0 || c.dps_steps > 1000) fail("dps_steps", "must lie in [1, 1000]");
  return c;
}

RobustnessSetup parse_robustness(const Json& value) {
  RobustnessSetup c;
  const Section s(value, "", {WEAKPRIOR_RUN_KEYS, "margin", "task"});
  parse_world_run(s, c.run);
  c.margin = s.number("margin", c.margin);
  if (s.has("task")) c.task = parse_task(s.raw("task"), "task");
  return c;
}

#undef WEAKPRIOR_RUN_KEYS

PriorSpec build_prior(const Json& value, const std::string& path, Rng& rng) {
  if (!value.is_object()) fail(path, "expected a prior object");
  const std::string type = value.value("type", std::string("image_world"));
  if (type == "explicit") {
    const Section s(value, path, {"type", "weights", "means", "tau2", "shape"});
    const std::vector<double> w = s.numbers("weights", {});
    const Json& mj = s.raw("means");
    if (w.empty() || !mj.is_array() || mj.size() != w.size()) {
      fail(path, "explicit prior needs 'weights' and one row of 'means' per weight");
    }
    std::vector<Vec64> means;
    for (std::size_t j = 0; j < mj.size(); ++j) {
      Json wrapped = Json::object();
      wrapped["v"] = mj[j];
      const Section row(wrapped, s.where("means") + "[" + std::to_string(j) + "]", {"v"});
      const auto v = row.numbers("v", {});
      if (v.empty()) fail(row.path(), "expected a non-empty array of numbers");
      means.emplace_back(v);
    }
    std::vector<double> tau2;
    if (s.raw("tau2").is_array()) {
      tau2 = s.numbers("tau2", {});
    } else {
      tau2.assign(w.size(), s.number("tau2", 0.01));
    }
    PriorSpec out{GaussianMixturePrior::homogeneous({1.0}, {Vec64(std::vector<double>{0.0})}, 1.0), std::nullopt};
    try {
      out.prior = GaussianMixturePrior::from_unnormalized(w, means, tau2);
    } catch (const InvalidArgument& e) {
      fail(path, e.what());
    }
    if (s.has("shape")) {
      out.shape = parse_shape(s.raw("shape"), s.where("shape"));
      if (out.shape->size() != out.prior.dim()) fail(s.where("shape"), "does not match the mean length");
    }
    return out;
  }
  if (type != "image_world") fail(path + ".type", "unknown prior type '" + type + "' (valid: explicit, image_world)");
  Json rest = value;
  rest.erase("type");
  const WorldConfig wc = parse_world(rest, path);
  return PriorSpec{make_image_world(wc, rng), wc.shape};
}

LinearOperator build_operator(const Json& value, const std::string& path, std::size_t n,
                              const std::optional<ImageShape>& shape, Rng& rng) {
  if (!value.is_object()) fail(path, "expected an operator object");
  const std::string kind = value.value("kind", std::string());
  auto need_shape = [&]() -> ImageShape {
    if (!shape) fail(path, "operator '" + kind + "' needs an image-shaped prior");
    return *shape;
  };
  try {
    if (kind == "random_mask") {
      const Section s(value, path, {"kind", "keep_fraction"});
      return make_random_mask(need_shape(), s.number("keep_fraction", 0.3), rng);
    }
    if (kind == "box_mask") {
      const Section s(value, path, {"kind", "box_fraction"});
      return make_box_mask(need_shape(), s.number("box_fraction", 0.5));
    }
    if (kind == "block_average") {
      const Section s(value, path, {"kind", "factor"});
      return make_block_average(need_shape(), s.count("factor", 2));
    }
    if (kind == "blur") {
      const Section s(value, path, {"kind", "kernel_size", "intensity"});
      return make_gaussian_blur(need_shape(), s.count("kernel_size", 9), s.number("intensity", 1.5));
    }
    if (kind == "identity") {
      const Section s(value, path, {"kind"});
      return LinearOperator::identity(n);
    }
    if (kind == "dense") {
      const Section s(value, path, {"kind", "rows", "matrix"});
      if (s.has("matrix")) {
        const Json& mj = s.raw("matrix");
        if (!mj.is_array() || mj.empty()) fail(s.where("matrix"), "expected an array of rows");
        Matrix a(static_cast<Eigen::Index>(mj.size()), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < mj.size(); ++i) {
          if (!mj[i].is_array() || mj[i].size() != n) fail(s.where("matrix"), "each row needs " + std::to_string(n) + " numbers");
          for (std::size_t j = 0; j < n; ++j) {
            if (!mj[i][j].is_number()) fail(s.where("matrix"), "entries must be numbers");
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mj[i][j].get<double>();
          }
        }
        return LinearOperator::dense(std::move(a));
      }
      // Gaussian entries with variance 1/n.
      const std::size_t rows = s.count("rows", n);
      if (rows == 0) fail(s.where("rows"), "must be positive");
      Matrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian() / std::sqrt(static_cast<double>(n));
      return LinearOperator::dense(std::move(a));
    }
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
  fail(path + ".kind", "unknown operator kind '" + kind +
                           "' (valid: random_mask, box_mask, block_average, blur, dense, identity)");
}

// ---------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw InvalidArgument("CsvTable: empty header");
}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw InvalidArgument("CsvTable: row has " + std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(header_.size()));
  }
  rows_.push_back(std::move(cells));
  return *this;
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (i) out << ',';
      if (!quote) {
        out << cells[i];
        continue;
      }
      out << '"';
      for (char c : cells[i]) out << (c == '"' ? "\"\"" : std::string(1, c));
      out << '"';
    }
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out.str();
}

}  // namespace weakprior
