// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include "weakprior/forward_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace weakprior {

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::RandomMask: return "random_mask";
    case OperatorKind::BoxMask: return "box_mask";
    case OperatorKind::BlockAverage: return "block_average";
    case OperatorKind::Convolution: return "convolution";
    case OperatorKind::Dense: return "dense";
  }
  return "unknown";
}

std::size_t reflect_index(long long i, std::size_t size) {
  if (size == 1) return 0;
  const long long period = 2 * (static_cast<long long>(size) - 1);
  long long k = i % period;
  if (k < 0) k += period;
  if (k >= static_cast<long long>(size)) k = period - k;
  return static_cast<std::size_t>(k);
}

LinearOperator::LinearOperator(OperatorKind kind, std::size_t n, std::size_t m, std::optional<ImageShape> shape,
                               std::shared_ptr<const Payload> payload)
    : kind_(kind), n_(n), m_(m), shape_(shape), payload_(std::move(payload)) {}

LinearOperator LinearOperator::mask(OperatorKind kind, std::size_t n, std::vector<std::size_t> indices,
                                    std::optional<ImageShape> shape) {
  if (kind != OperatorKind::RandomMask && kind != OperatorKind::BoxMask) {
    throw InvalidArgument("mask: kind must be RandomMask or BoxMask");
  }
  if (n == 0) throw InvalidArgument("mask: input dimension must be positive");
  if (indices.empty()) throw InvalidArgument("mask: no observed coordinates");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n) throw InvalidArgument("mask: index out of range");
    if (i > 0 && indices[i] <= indices[i - 1]) {
      throw InvalidArgument("mask: indices must be strictly increasing");
    }
  }
  if (shape && shape->size() != n) throw InvalidArgument("mask: shape does not match n");
  const std::size_t m = indices.size();
  return LinearOperator(kind, n, m, shape, std::make_shared<const Payload>(MaskData{std::move(indices)}));
}

LinearOperator LinearOperator::block_average(ImageShape shape, std::size_t factor) {
  if (factor == 0) throw InvalidArgument("block_average: factor must be positive");
  if (shape.size() == 0) throw InvalidArgument("block_average: empty shape");
  if (shape.height % factor != 0 || shape.width % factor != 0) {
    throw InvalidArgument("block_average: factor " + std::to_string(factor) + " does not divide " +
                          std::to_string(shape.height) + "x" + std::to_string(shape.width));
  }
  const std::size_t m = (shape.height / factor) * (shape.width / factor) * shape.channels;
  return LinearOperator(OperatorKind::BlockAverage, shape.size(), m, shape,
                        std::make_shared<const Payload>(BlockData{factor}));
}

LinearOperator LinearOperator::separable_convolution(ImageShape shape, std::vector<double> taps) {
  if (shape.size() == 0) throw InvalidArgument("convolution: empty shape");
  if (taps.empty() || taps.size() % 2 == 0) throw InvalidArgument("convolution: tap count must be odd");
  const long long half = static_cast<long long>(taps.size() / 2);
  ConvData data;
  data.reflect_rows.resize(shape.height * taps.size());
  data.reflect_cols.resize(shape.width * taps.size());
  for (std::size_t r = 0; r < shape.height; ++r) {
    for (std::size_t t = 0; t < taps.size(); ++t) {
      data.reflect_rows[r * taps.size() + t] =
          reflect_index(static_cast<long long>(r) + static_cast<long long>(t) - half, shape.height);
    }
  }
  for (std::size_t c = 0; c < shape.width; ++c) {
    for (std::size_t t = 0; t < taps.size(); ++t) {
      data.reflect_cols[c * taps.size() + t] =
          reflect_index(static_cast<long long>(c) + static_cast<long long>(t) - half, shape.width);
    }
  }
  data.taps = std::move(taps);
  return LinearOperator(OperatorKind::Convolution, shape.size(), shape.size(), shape,
                        std::make_shared<const Payload>(std::move(data)));
}

LinearOperator LinearOperator::dense(Matrix a) {
  if (a.rows() == 0 || a.cols() == 0) throw InvalidArgument("dense: empty matrix");
  if (!a.allFinite()) throw InvalidArgument("dense: non-finite entries");
  const auto n = static_cast<std::size_t>(a.cols());
  const auto m = static_cast<std::size_t>(a.rows());
  return LinearOperator(OperatorKind::Dense, n, m, std::nullopt,
                        std::make_shared<const Payload>(DenseData{std::move(a)}));
}

LinearOperator LinearOperator::identity(std::size_t n) {
  return dense(Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

void LinearOperator::check_input(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != n_) {
    throw InvalidArgument("apply: expected input of length " + std::to_string(n_) + ", got " +
                          std::to_string(x.size()));
  }
}

void LinearOperator::check_output(const Vector& v) const {
  if (static_cast<std::size_t>(v.size()) != m_) {
    throw InvalidArgument("adjoint: expected input of length " + std::to_string(m_) + ", got " +
                          std::to_string(v.size()));
  }
}

Vector LinearOperator::conv_pass(const Vector& x, bool along_rows, bool transpose) const {
  const auto& d = std::get<ConvData>(*payload_);
  const ImageShape& s = *shape_;
  const std::size_t taps = d.taps.size();
  Vector out = Vector::Zero(x.size());
  for (std::size_t r = 0; r < s.height; ++r) {
    for (std::size_t c = 0; c < s.width; ++c) {
      for (std::size_t t = 0; t < taps; ++t) {
        const std::size_t sr = along_rows ? d.reflect_rows[r * taps + t] : r;
        const std::size_t sc = along_rows ? c : d.reflect_cols[c * taps + t];
        const double k = d.taps[t];
        const std::size_t dst = s.index(r, c, 0);
        const std::size_t src = s.index(sr, sc, 0);
        for (std::size_t ch = 0; ch < s.channels; ++ch) {
          if (transpose) {
            out[static_cast<Eigen::Index>(src + ch)] += k * x[static_cast<Eigen::Index>(dst + ch)];
          } else {
            out[static_cast<Eigen::Index>(dst + ch)] += k * x[static_cast<Eigen::Index>(src + ch)];
          }
        }
      }
    }
  }
  return out;
}

Vector LinearOperator::apply(const Vector& x) const {
  check_input(x);
  switch (kind_) {
    case OperatorKind::RandomMask:
    case OperatorKind::BoxMask: {
      const auto& idx = std::get<MaskData>(*payload_).indices;
      Vector y(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) y[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(idx[i])];
      return y;
    }
    case OperatorKind::BlockAverage: {
      const std::size_t f = std::get<BlockData>(*payload_).factor;
      const ImageShape& s = *shape_;
      const std::size_t ow = s.width / f;
      Vector y = Vector::Zero(static_cast<Eigen::Index>(m_));
      const double inv = 1.0 / static_cast<double>(f * f);
      for (std::size_t r = 0; r < s.height; ++r) {
        for (std::size_t c = 0; c < s.width; ++c) {
          const std::size_t dst = ((r / f) * ow + c / f) * s.channels;
          for (std::size_t ch = 0; ch < s.channels; ++ch) {
            y[static_cast<Eigen::Index>(dst + ch)] += inv * x[static_cast<Eigen::Index>(s.index(r, c, ch))];
          }
        }
      }
      return y;
    }
    case OperatorKind::Convolution:
      return conv_pass(conv_pass(x, false, false), true, false);
    case OperatorKind::Dense:
      return std::get<DenseData>(*payload_).a * x;
  }
  throw InvalidState("apply: unknown operator kind");
}

Vector LinearOperator::adjoint(const Vector& v) const {
  check_output(v);
  switch (kind_) {
    case OperatorKind::RandomMask:
    case OperatorKind::BoxMask: {
      const auto& idx = std::get<MaskData>(*payload_).indices;
      Vector x = Vector::Zero(static_cast<Eigen::Index>(n_));
      for (std::size_t i = 0; i < idx.size(); ++i) x[static_cast<Eigen::Index>(idx[i])] = v[static_cast<Eigen::Index>(i)];
      return x;
    }
    case OperatorKind::BlockAverage: {
      const std::size_t f = std::get<BlockData>(*payload_).factor;
      const ImageShape& s = *shape_;
      const std::size_t ow = s.width / f;
      const double inv = 1.0 / static_cast<double>(f * f);
      Vector x(static_cast<Eigen::Index>(n_));
      for (std::size_t r = 0; r < s.height; ++r) {
        for (std::size_t c = 0; c < s.width; ++c) {
          const std::size_t src = ((r / f) * ow + c / f) * s.channels;
          for (std::size_t ch = 0; ch < s.channels; ++ch) {
            x[static_cast<Eigen::Index>(s.index(r, c, ch))] = inv * v[static_cast<Eigen::Index>(src + ch)];
          }
        }
      }
      return x;
    }
    case OperatorKind::Convolution:
      return conv_pass(conv_pass(v, true, true), false, true);
    case OperatorKind::Dense:
      return std::get<DenseData>(*payload_).a.transpose() * v;
  }
  throw InvalidState("adjoint: unknown operator kind");
}

Matrix LinearOperator::to_dense() const {
  if (kind_ == OperatorKind::Dense) return std::get<DenseData>(*payload_).a;
  if (kind_ == OperatorKind::Convolution && n_ > kMaxDenseInput) {
    throw InvalidArgument("to_dense: convolution input dimension " + std::to_string(n_) + " exceeds " +
                          std::to_string(kMaxDenseInput));
  }
  Matrix a(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n_));
  Vector e = Vector::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t j = 0; j < n_; ++j) {
    e[static_cast<Eigen::Index>(j)] = 1.0;
    a.col(static_cast<Eigen::Index>(j)) = apply(e);
    e[static_cast<Eigen::Index>(j)] = 0.0;
  }
  return a;
}

AatStructure LinearOperator::aat_structure() const {
  switch (kind_) {
    case OperatorKind::RandomMask:
    case OperatorKind::BoxMask:
      return ScaledIdentity{1.0};
    case OperatorKind::BlockAverage:
      return ScaledIdentity{1.0 / static_cast<double>(block_size())};
    case OperatorKind::Convolution:
    case OperatorKind::Dense: {
      const Matrix a = to_dense();
      Matrix aat = a * a.transpose();
      aat = 0.5 * (aat + aat.transpose());
      return DenseSpd{std::move(aat)};
    }
  }
  throw InvalidState("aat_structure: unknown operator kind");
}

const std::vector<std::size_t>& LinearOperator::mask_indices() const {
  if (!is_mask()) throw InvalidState("mask_indices: operator is " + to_string(kind_));
  return std::get<MaskData>(*payload_).indices;
}

std::size_t LinearOperator::block_factor() const {
  if (kind_ != OperatorKind::BlockAverage) throw InvalidState("block_factor: operator is " + to_string(kind_));
  return std::get<BlockData>(*payload_).factor;
}

const std::vector<double>& LinearOperator::kernel_taps() const {
  if (kind_ != OperatorKind::Convolution) throw InvalidState("kernel_taps: operator is " + to_string(kind_));
  return std::get<ConvData>(*payload_).taps;
}

Observation::Observation(Vec64 y_, LinearOperator op_, double sigma)
    : y(std::move(y_)), op(std::move(op_)), noise_sigma(sigma) {
  if (y.size() != op.output_dim()) {
    throw InvalidArgument("Observation: y has length " + std::to_string(y.size()) + ", operator outputs " +
                          std::to_string(op.output_dim()));
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw InvalidArgument("Observation: noise sigma must be finite and >= 0");
  }
}

Vector apply(const LinearOperator& op, const Vector& x) { return op.apply(x); }
Vector adjoint(const LinearOperator& op, const Vector& v) { return op.adjoint(v); }
AatStructure aat_structure(const LinearOperator& op) { return op.aat_structure(); }

Observation observe(const LinearOperator& op, const Vector& x_true, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw InvalidArgument("observe: sigma must be >= 0");
  Vector y = op.apply(x_true);
  if (sigma > 0.0) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * rng.gaussian();
  }
  return Observation(Vec64(std::move(y)), op, sigma);
}

namespace {

void check_fraction(double f, const char* what) {
  if (!(f > 0.0 && f <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in (0, 1]");
}

std::vector<std::size_t> expand_pixels(const std::vector<std::size_t>& pixels, std::size_t channels) {
  std::vector<std::size_t> idx;
  idx.reserve(pixels.size() * channels);
  for (std::size_t p : pixels) {
    for (std::size_t ch = 0; ch < channels; ++ch) idx.push_back(p * channels + ch);
  }
  return idx;
}

}  // namespace

LinearOperator make_random_mask(ImageShape shape, double keep_fraction, Rng& rng) {
  check_fraction(keep_fraction, "keep_fraction");
  const std::size_t total = shape.pixels();
  if (total == 0 || shape.channels == 0) throw InvalidArgument("make_random_mask: empty shape");
  const auto keep = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(total)));
  if (keep == 0) throw InvalidArgument("make_random_mask: keep_fraction keeps no pixels");
  std::vector<std::size_t> pixels(total);
  std::iota(pixels.begin(), pixels.end(), std::size_t{0});
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(pixels[i], pixels[j]);
  }
  pixels.resize(keep);
  std::sort(pixels.begin(), pixels.end());
  return LinearOperator::mask(OperatorKind::RandomMask, shape.size(), expand_pixels(pixels, shape.channels), shape);
}

LinearOperator make_box_mask(ImageShape shape, double box_fraction) {
  check_fraction(box_fraction, "box_fraction");
  const std::size_t side_max = std::min(shape.height, shape.width);
  if (side_max == 0 || shape.channels == 0) throw InvalidArgument("make_box_mask: empty shape");
  auto side = static_cast<std::size_t>(std::ceil(box_fraction * static_cast<double>(side_max) - 1e-9));
  side = std::min(side, side_max);
  const std::size_t top = (shape.height - side) / 2;
  const std::size_t left = (shape.width - side) / 2;
  std::vector<std::size_t> pixels;
  for (std::size_t r = 0; r < shape.height; ++r) {
    for (std::size_t c = 0; c < shape.width; ++c) {
      const bool inside = r >= top && r < top + side && c >= left && c < left + side;
      if (!inside) pixels.push_back(r * shape.width + c);
    }
  }
  if (pixels.empty()) throw InvalidArgument("make_box_mask: box removes every pixel");
  return LinearOperator::mask(OperatorKind::BoxMask, shape.size(), expand_pixels(pixels, shape.channels), shape);
}

LinearOperator make_block_average(ImageShape shape, std::size_t factor) {
  return LinearOperator::block_average(shape, factor);
}

std::vector<double> gaussian_taps(std::size_t kernel_size, double intensity) {
  if (kernel_size == 0 || kernel_size % 2 == 0) throw InvalidArgument("gaussian blur: kernel_size must be odd");
  if (!(intensity > 0.0)) throw InvalidArgument("gaussian blur: intensity must be positive");
  const long long half = static_cast<long long>(kernel_size / 2);
  std::vector<double> taps(kernel_size);
  double sum = 0.0;
  for (long long i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (intensity * intensity));
    taps[static_cast<std::size_t>(i + half)] = v;
    sum += v;
  }
  for (double& t : taps) t /= sum;
  return taps;
}

LinearOperator make_gaussian_blur(ImageShape shape, std::size_t kernel_size, double intensity) {
  return LinearOperator::separable_convolution(shape, gaussian_taps(kernel_size, intensity));
}

}  // namespace weakprior
