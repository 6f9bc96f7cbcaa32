// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_NUMERIC_HPP
#define WEAKPRIOR_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "weakprior/core.hpp"

namespace weakprior {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log(sum(exp(v))). -inf entries contribute nothing; all -inf gives -inf.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -kInf;
  const double hi = *std::max_element(v.begin(), v.end());
  if (hi == -kInf) return -kInf;
  if (hi == kInf) return kInf;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - hi);
  return hi + std::log(sum);
}

inline double log_sum_exp(const Vector& v) { return log_sum_exp(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))); }

// Normalizes log-weights in place so that log_sum_exp(v) == 0.
inline void normalize_log_weights(Vector& v) {
  const double z = log_sum_exp(v);
  v.array() -= z;
}

}  // namespace weakprior

#endif  // WEAKPRIOR_NUMERIC_HPP
