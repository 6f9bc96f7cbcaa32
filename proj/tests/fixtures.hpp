// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

// Shared synthetic runs for unit and acceptance tests.

#ifndef WEAKPRIOR_TESTS_FIXTURES_HPP
#define WEAKPRIOR_TESTS_FIXTURES_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "weakprior/sphere_opt.hpp"

namespace weakprior::fixtures {

struct UShapedRun {
  std::vector<double> fit;
  std::vector<double> holdout;
  std::size_t selected = 0;
  double selected_holdout = 0.0;
  double min_holdout = 0.0;
};

/// Fit loss decays monotonically; holdout loss is a noisy parabola with its
/// basin at step `steps / 3`. Runs HoldoutTopK over the trace.
inline UShapedRun u_shaped_run(std::size_t steps, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  UShapedRun run;
  TopKBuffer buf(k);
  const double center = static_cast<double>(steps) / 3.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double s = static_cast<double>(t);
    run.fit.push_back(std::exp(-s / (0.2 * static_cast<double>(steps))));
    const double u = (s - center) / center;
    run.holdout.push_back(0.5 + 0.5 * u * u + 0.004 * rng.gaussian());
    buf.update(run.holdout.back(), t, Vector::Constant(1, s));
  }
  run.selected = buf.select().step;
  run.selected_holdout = run.holdout[run.selected];
  run.min_holdout = *std::min_element(run.holdout.begin(), run.holdout.end());
  return run;
}

}  // namespace weakprior::fixtures

#endif  // WEAKPRIOR_TESTS_FIXTURES_HPP
