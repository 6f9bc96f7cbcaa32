// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "weakprior/solver.hpp"

namespace weakprior {

double psnr(const Vector& x_hat, const Vector& x_ref, double peak) {
  if (x_hat.size() != x_ref.size() || x_hat.size() == 0) throw InvalidArgument("psnr: shape mismatch");
  if (!(peak > 0.0)) throw InvalidArgument("psnr: peak must be > 0");
  const double mse = (x_hat - x_ref).squaredNorm() / static_cast<double>(x_hat.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

// Inclusive prefix sums with a zero border: table[(r+1)*(w+1) + c+1].
std::vector<double> integral(const std::vector<double>& img, std::size_t h, std::size_t w) {
  std::vector<double> t((h + 1) * (w + 1), 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < w; ++c) {
      row += img[r * w + c];
      t[(r + 1) * (w + 1) + c + 1] = t[r * (w + 1) + c + 1] + row;
    }
  }
  return t;
}

double box_sum(const std::vector<double>& t, std::size_t w, std::size_t r, std::size_t c, std::size_t wh,
               std::size_t ww) {
  const std::size_t s = w + 1;
  return t[(r + wh) * s + c + ww] - t[r * s + c + ww] - t[(r + wh) * s + c] + t[r * s + c];
}

}  // namespace

double ssim(const Vector& x_hat, const Vector& x_ref, ImageShape shape, double peak) {
  if (x_hat.size() != x_ref.size() || static_cast<std::size_t>(x_hat.size()) != shape.size() || shape.size() == 0) {
    throw InvalidArgument("ssim: shape mismatch");
  }
  if (!(peak > 0.0)) throw InvalidArgument("ssim: peak must be > 0");
  if ((x_hat.array() == x_ref.array()).all()) return 1.0;
  const std::size_t h = shape.height, w = shape.width, ch = shape.channels;
  const std::size_t wh = std::min(kSsimWindow, h), ww = std::min(kSsimWindow, w);
  const double npx = static_cast<double>(wh * ww);
  const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  std::vector<double> a(h * w), b(h * w), aa(h * w), bb(h * w), ab(h * w);
  for (std::size_t k = 0; k < ch; ++k) {
    for (std::size_t p = 0; p < h * w; ++p) {
      const double u = x_hat[static_cast<Eigen::Index>(p * ch + k)];
      const double v = x_ref[static_cast<Eigen::Index>(p * ch + k)];
      a[p] = u;
      b[p] = v;
      aa[p] = u * u;
      bb[p] = v * v;
      ab[p] = u * v;
    }
    const auto ta = integral(a, h, w), tb = integral(b, h, w), taa = integral(aa, h, w), tbb = integral(bb, h, w),
               tab = integral(ab, h, w);
    double sum = 0.0;
    for (std::size_t r = 0; r + wh <= h; ++r) {
      for (std::size_t c = 0; c + ww <= w; ++c) {
        const double mx = box_sum(ta, w, r, c, wh, ww) / npx;
        const double my = box_sum(tb, w, r, c, wh, ww) / npx;
        const double vx = std::max(0.0, box_sum(taa, w, r, c, wh, ww) / npx - mx * mx);
        const double vy = std::max(0.0, box_sum(tbb, w, r, c, wh, ww) / npx - my * my);
        const double cxy = box_sum(tab, w, r, c, wh, ww) / npx - mx * my;
        sum += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
    }
    total += sum / static_cast<double>((h - wh + 1) * (w - ww + 1));
  }
  return total / static_cast<double>(ch);
}

double ssim(const ImageGrid& x_hat, const ImageGrid& x_ref) {
  if (!(x_hat.shape() == x_ref.shape())) throw InvalidArgument("ssim: shape mismatch");
  return ssim(x_hat.pixels().values(), x_ref.pixels().values(), x_ref.shape(), x_ref.range().width());
}

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names{"psnr", "ssim", "mse"};
  return names;
}

std::map<std::string, double> compute_metrics(const Vector& x_hat, const MetricReference& ref,
                                              const std::vector<std::string>& names) {
  std::map<std::string, double> out;
  for (const auto& name : names) {
    if (name == "psnr") {
      out[name] = psnr(x_hat, ref.x_true, ref.peak);
    } else if (name == "ssim") {
      if (!ref.shape) throw InvalidArgument("ssim requires an image shape");
      out[name] = ssim(x_hat, ref.x_true, *ref.shape, ref.peak);
    } else if (name == "mse") {
      out[name] = (x_hat - ref.x_true).squaredNorm() / static_cast<double>(x_hat.size());
    } else {
      throw InvalidArgument("unknown metric \"" + name + "\" (valid: psnr, ssim, mse)");
    }
  }
  return out;
}

}  // namespace weakprior
