// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_CORE_HPP
#define WEAKPRIOR_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace weakprior {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error taxonomy shared by all modules.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A computation produced a non-finite value it cannot recover from.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Immutable dense vector of finite doubles.
///
/// Math kernels operate on Eigen vectors; Vec64 is the validated value type
/// used where data is stored or crosses a module boundary.
class Vec64 {
 public:
  Vec64() = default;
  explicit Vec64(Vector values);
  explicit Vec64(const std::vector<double>& values);
  Vec64(std::initializer_list<double> values);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  bool empty() const noexcept { return values_.size() == 0; }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  const Vector& values() const noexcept { return values_; }
  std::span<const double> span() const noexcept { return {values_.data(), size()}; }
  std::vector<double> to_std() const { return {values_.data(), values_.data() + values_.size()}; }

  friend bool operator==(const Vec64& a, const Vec64& b) {
    return a.values_.size() == b.values_.size() && (a.values_.array() == b.values_.array()).all();
  }

 private:
  Vector values_;
};

struct ValueRange {
  double lo = -1.0;
  double hi = 1.0;
  double width() const noexcept { return hi - lo; }
};

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t pixels() const noexcept { return height * width; }
  std::size_t size() const noexcept { return height * width * channels; }
  std::size_t index(std::size_t row, std::size_t col, std::size_t ch) const noexcept {
    return (row * width + col) * channels + ch;
  }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Row-major, channel-last image whose pixels lie in a closed value range.
class ImageGrid {
 public:
  ImageGrid(ImageShape shape, Vec64 pixels, ValueRange range = {});

  const ImageShape& shape() const noexcept { return shape_; }
  const Vec64& pixels() const noexcept { return pixels_; }
  const ValueRange& range() const noexcept { return range_; }
  double at(std::size_t row, std::size_t col, std::size_t ch) const {
    return pixels_[shape_.index(row, col, ch)];
  }

  friend bool operator==(const ImageGrid& a, const ImageGrid& b) {
    return a.shape_ == b.shape_ && a.pixels_ == b.pixels_ && a.range_.lo == b.range_.lo &&
           a.range_.hi == b.range_.hi;
  }

 private:
  ImageShape shape_;
  Vec64 pixels_;
  ValueRange range_;
};

struct SyntheticDataset {
  std::vector<ImageGrid> items;
  std::string label;

  SyntheticDataset(std::vector<ImageGrid> items, std::string label);
  const ImageShape& shape() const { return items.front().shape(); }
  std::size_t size() const noexcept { return items.size(); }
};

/// Deterministic counter-based generator (SplitMix64 finalizer over a
/// keyed counter). Streams depend only on (key, call sequence), so child
/// streams derived with split() are reproducible and independent of how
/// work is scheduled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() noexcept;
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal draw (Marsaglia polar method).
  double gaussian() noexcept;
  /// Uniform integer in [0, bound), rejection-sampled, bound >= 1.
  std::uint64_t below(std::uint64_t bound);
  /// Child stream keyed on (this stream's seed, stream_id); does not advance this stream.
  Rng split(std::uint64_t stream_id) const;

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

Vec64 gaussian_vector(Rng& rng, std::size_t dim);
Vector gaussian_eigen(Rng& rng, std::size_t dim);

}  // namespace weakprior

#endif  // WEAKPRIOR_CORE_HPP
