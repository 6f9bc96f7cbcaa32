// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_FORWARD_OPS_HPP
#define WEAKPRIOR_FORWARD_OPS_HPP

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "weakprior/core.hpp"

namespace weakprior {

enum class OperatorKind { RandomMask, BoxMask, BlockAverage, Convolution, Dense };

std::string to_string(OperatorKind kind);

/// A A^T = c I.
struct ScaledIdentity {
  double c;
};

/// Explicit A A^T (symmetric positive semidefinite, m x m).
struct DenseSpd {
  Matrix matrix;
};

using AatStructure = std::variant<ScaledIdentity, DenseSpd>;

/// Largest input dimension for which convolution operators may be
/// materialized as dense matrices.
inline constexpr std::size_t kMaxDenseInput = 16384;

/// Linear forward map A : R^n -> R^m. Immutable; copies share the payload.
class LinearOperator {
 public:
  /// Coordinate projection onto `indices` (strictly increasing, < n).
  static LinearOperator mask(OperatorKind kind, std::size_t n, std::vector<std::size_t> indices,
                             std::optional<ImageShape> shape = std::nullopt);
  /// Non-overlapping factor x factor block means, per channel.
  static LinearOperator block_average(ImageShape shape, std::size_t factor);
  /// Separable convolution (row taps then column taps), reflect padding, per channel.
  static LinearOperator separable_convolution(ImageShape shape, std::vector<double> taps);
  static LinearOperator dense(Matrix a);
  static LinearOperator identity(std::size_t n);

  OperatorKind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return n_; }
  std::size_t output_dim() const noexcept { return m_; }
  bool is_mask() const noexcept { return kind_ == OperatorKind::RandomMask || kind_ == OperatorKind::BoxMask; }
  const std::optional<ImageShape>& image_shape() const noexcept { return shape_; }

  Vector apply(const Vector& x) const;
  Vector adjoint(const Vector& v) const;
  AatStructure aat_structure() const;
  /// Explicit m x n matrix. Convolutions are limited to n <= kMaxDenseInput.
  Matrix to_dense() const;

  /// Observed scalar indices (mask kinds only).
  const std::vector<std::size_t>& mask_indices() const;
  /// Per-axis block factor (BlockAverage only).
  std::size_t block_factor() const;
  /// Entries per block row of A, i.e. factor^2 (BlockAverage only).
  std::size_t block_size() const { return block_factor() * block_factor(); }
  /// 1D taps of the separable kernel (Convolution only).
  const std::vector<double>& kernel_taps() const;

 private:
  struct MaskData {
    std::vector<std::size_t> indices;
  };
  struct BlockData {
    std::size_t factor;
  };
  struct ConvData {
    std::vector<double> taps;
    // reflect_rows[r * taps + t] = source row for output row r, tap t; same for cols.
    std::vector<std::size_t> reflect_rows;
    std::vector<std::size_t> reflect_cols;
  };
  struct DenseData {
    Matrix a;
  };
  using Payload = std::variant<MaskData, BlockData, ConvData, DenseData>;

  LinearOperator(OperatorKind kind, std::size_t n, std::size_t m, std::optional<ImageShape> shape,
                 std::shared_ptr<const Payload> payload);

  void check_input(const Vector& x) const;
  void check_output(const Vector& v) const;
  Vector conv_pass(const Vector& x, bool along_rows, bool transpose) const;

  OperatorKind kind_;
  std::size_t n_;
  std::size_t m_;
  std::optional<ImageShape> shape_;
  std::shared_ptr<const Payload> payload_;
};

/// y = A x + eps, eps ~ N(0, sigma^2 I_m).
struct Observation {
  Vec64 y;
  LinearOperator op;
  double noise_sigma;

  Observation(Vec64 y, LinearOperator op, double noise_sigma);
  std::size_t m() const noexcept { return y.size(); }
};

Vector apply(const LinearOperator& op, const Vector& x);
Vector adjoint(const LinearOperator& op, const Vector& v);
AatStructure aat_structure(const LinearOperator& op);

Observation observe(const LinearOperator& op, const Vector& x_true, double sigma, Rng& rng);

/// Keeps round(keep_fraction * h * w) uniformly sampled pixels, all channels.
LinearOperator make_random_mask(ImageShape shape, double keep_fraction, Rng& rng);
/// Removes a centered square of side ceil(box_fraction * min(h, w)) pixels.
LinearOperator make_box_mask(ImageShape shape, double box_fraction);
/// `factor` is the per-axis downsampling factor; each block holds factor^2 pixels.
LinearOperator make_block_average(ImageShape shape, std::size_t factor);
/// Truncated Gaussian kernel with standard deviation `intensity`, normalized to sum 1.
LinearOperator make_gaussian_blur(ImageShape shape, std::size_t kernel_size, double intensity);

/// Normalized 1D Gaussian taps of odd length.
std::vector<double> gaussian_taps(std::size_t kernel_size, double intensity);
/// Reflect (mirror without edge repeat) index into [0, size).
std::size_t reflect_index(long long i, std::size_t size);

}  // namespace weakprior

#endif  // WEAKPRIOR_FORWARD_OPS_HPP
