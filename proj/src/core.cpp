// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/core.hpp"

#include <cmath>
#include <utility>

namespace weakprior {

namespace {

void require_finite(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw InvalidArgument("Vec64: non-finite entry at index " + std::to_string(i));
    }
  }
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace

Vec64::Vec64(Vector values) : values_(std::move(values)) { require_finite(values_); }

Vec64::Vec64(const std::vector<double>& values)
    : values_(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()))) {
  require_finite(values_);
}

Vec64::Vec64(std::initializer_list<double> values) : values_(static_cast<Eigen::Index>(values.size())) {
  Eigen::Index i = 0;
  for (double v : values) values_[i++] = v;
  require_finite(values_);
}

ImageGrid::ImageGrid(ImageShape shape, Vec64 pixels, ValueRange range)
    : shape_(shape), pixels_(std::move(pixels)), range_(range) {
  if (shape_.height == 0 || shape_.width == 0 || shape_.channels == 0) {
    throw InvalidArgument("ImageGrid: dimensions must be positive");
  }
  if (!(range_.lo < range_.hi)) throw InvalidArgument("ImageGrid: empty value range");
  if (pixels_.size() != shape_.size()) {
    throw InvalidArgument("ImageGrid: expected " + std::to_string(shape_.size()) + " pixels, got " +
                          std::to_string(pixels_.size()));
  }
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    const double p = pixels_[i];
    if (p < range_.lo || p > range_.hi) {
      throw InvalidArgument("ImageGrid: pixel " + std::to_string(i) + " = " + std::to_string(p) +
                            " outside value range");
    }
  }
}

SyntheticDataset::SyntheticDataset(std::vector<ImageGrid> images, std::string tag)
    : items(std::move(images)), label(std::move(tag)) {
  if (items.empty()) throw InvalidArgument("SyntheticDataset: empty dataset");
  for (const auto& item : items) {
    if (!(item.shape() == items.front().shape())) {
      throw InvalidArgument("SyntheticDataset: images must share one shape");
    }
  }
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

Rng::Rng(std::uint64_t seed) : seed_(seed), key_(mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

std::uint64_t Rng::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::gaussian() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("Rng::below: bound must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

Rng Rng::split(std::uint64_t stream_id) const {
  return Rng(mix64(seed_ ^ mix64(stream_id + 0x3C6EF372FE94F82BULL)));
}

Vector gaussian_eigen(Rng& rng, std::size_t dim) {
  if (dim == 0) throw InvalidArgument("gaussian_vector: dim must be >= 1");
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.gaussian();
  return v;
}

Vec64 gaussian_vector(Rng& rng, std::size_t dim) { return Vec64(gaussian_eigen(rng, dim)); }

}  // namespace weakprior
