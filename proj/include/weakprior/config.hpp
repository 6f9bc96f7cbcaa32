// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

// JSON descriptors for experiment configs and plain CSV emission.

#ifndef WEAKPRIOR_CONFIG_HPP
#define WEAKPRIOR_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "weakprior/consistency.hpp"
#include "weakprior/experiments.hpp"
#include "weakprior/mixture_posterior.hpp"

namespace weakprior {

using Json = nlohmann::json;

/// Malformed or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Read-only view of one JSON object that rejects keys outside `keys`.
class Section {
 public:
  Section(const Json& value, std::string path, std::initializer_list<const char*> keys);

  bool has(const char* key) const;
  const Json& raw(const char* key) const;
  const std::string& path() const noexcept { return path_; }
  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const char* key, double fallback) const;
  std::size_t count(const char* key, std::size_t fallback) const;
  std::uint64_t u64(const char* key, std::uint64_t fallback) const;
  bool flag(const char* key, bool fallback) const;
  std::string text(const char* key, const std::string& fallback) const;
  std::vector<double> numbers(const char* key, const std::vector<double>& fallback) const;
  std::vector<std::size_t> counts(const char* key, const std::vector<std::size_t>& fallback) const;
  std::vector<std::string> texts(const char* key, const std::vector<std::string>& fallback) const;

 private:
  const Json* value_;
  std::string path_;
};

Json load_json(const std::filesystem::path& path);
/// 64-bit FNV-1a of `bytes`, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

// ---- descriptors -----------------------------------------------------------

ImageShape parse_shape(const Json& value, const std::string& path);
WorldConfig parse_world(const Json& value, const std::string& path, WorldConfig base = {});
TaskSpec parse_task(const Json& value, const std::string& path);
SolveConfig parse_solve_config(const Json& value, const std::string& path, SolveConfig base = {});
DpsConfig parse_dps(const Json& value, const std::string& path, DpsConfig base = {});
/// `worlds`, `seed`, `sigma`, `generator_steps`, `mismatch`, `iterations`, `world`.
void parse_world_run(const Section& s, WorldRunConfig& out);

FailureSweepConfig parse_failure_sweep(const Json& value);
BenchConfig parse_bench(const Json& value);
struct RobustnessSetup {
  WorldRunConfig run;
  double margin = 5.0;
  TaskSpec task;
};
RobustnessSetup parse_robustness(const Json& value);

/// Prior descriptor: {"type": "explicit", "weights", "means", "tau2"} or
/// {"type": "image_world", ...world fields}. Image worlds are drawn from rng.
struct PriorSpec {
  GaussianMixturePrior prior;
  std::optional<ImageShape> shape;
};
PriorSpec build_prior(const Json& value, const std::string& path, Rng& rng);

/// Operator descriptor: {"kind": "random_mask" | "box_mask" | "block_average" |
/// "blur" | "dense" | "identity", ...}. Image kinds need a shape.
LinearOperator build_operator(const Json& value, const std::string& path, std::size_t n,
                              const std::optional<ImageShape>& shape, Rng& rng);

// ---- CSV -------------------------------------------------------------------

/// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(std::vector<std::string> cells);
  std::string str() const;
  std::size_t rows() const noexcept { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace weakprior

#endif  // WEAKPRIOR_CONFIG_HPP
