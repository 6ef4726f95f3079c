// Copyright 2026 The whiteprior Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "whiteprior/error.hpp"
#include "whiteprior/image_grid.hpp"

namespace whiteprior {

/// 10 log10(peak^2 / MSE) in dB; +infinity when the images are identical.
inline double psnr(const ImageGrid& estimate, const ImageGrid& reference, double peak = 1.0) {
  estimate.require_same_shape(reference);
  if (!(peak > 0.0)) fail(ErrorCode::kInvalidArgument, "peak must be positive");
  double sse = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate.pixels()[i] - reference.pixels()[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(estimate.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

struct SsimParams {
  std::size_t window = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Mean SSIM over every position where the Gaussian window fits entirely
/// inside the image.
inline double ssim(const ImageGrid& a, const ImageGrid& b, const SsimParams& params = {}) {
  a.require_same_shape(b);
  if (params.window % 2 == 0 || params.window == 0) fail(ErrorCode::kInvalidArgument, "SSIM window must be odd");
  if (!(params.k1 > 0.0) || !(params.k2 > 0.0) || !(params.window_sigma > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "SSIM constants must be positive");
  }
  if (a.width() < params.window || a.height() < params.window) {
    fail(ErrorCode::kInvalidArgument, "image smaller than SSIM window");
  }
  const std::size_t win = params.window;
  const double half = static_cast<double>(win / 2);
  std::vector<double> weights(win * win);
  double norm = 0.0;
  for (std::size_t i = 0; i < win; ++i) {
    for (std::size_t j = 0; j < win; ++j) {
      const double dy = static_cast<double>(i) - half;
      const double dx = static_cast<double>(j) - half;
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * params.window_sigma * params.window_sigma));
      weights[i * win + j] = w;
      norm += w;
    }
  }
  for (double& w : weights) w /= norm;

  const double c1 = (params.k1 * params.peak) * (params.k1 * params.peak);
  const double c2 = (params.k2 * params.peak) * (params.k2 * params.peak);
  double total = 0.0;
  std::size_t positions = 0;
  for (std::size_t r = 0; r + win <= a.height(); ++r) {
    for (std::size_t c = 0; c + win <= a.width(); ++c) {
      double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (std::size_t i = 0; i < win; ++i) {
        for (std::size_t j = 0; j < win; ++j) {
          const double w = weights[i * win + j];
          const double va = a(r + i, c + j);
          const double vb = b(r + i, c + j);
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      }
      const double var_a = saa - ma * ma;
      const double var_b = sbb - mb * mb;
      const double cov = sab - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      ++positions;
    }
  }
  return total / static_cast<double>(positions);
}

struct TTestResult {
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::size_t degrees_of_freedom = 0;
};

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 500;
  constexpr double kTiny = 1e-300;
  constexpr double kTolerance = 1e-15;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kTolerance) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "incomplete_beta arguments out of range");
  }
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The fraction converges fastest on the side of the symmetry point.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

/// Paired t-test on a - b with the sample standard deviation of the differences.
inline TTestResult paired_t_test(std::span<const double> scores_a, std::span<const double> scores_b) {
  if (scores_a.size() != scores_b.size()) fail(ErrorCode::kDimensionMismatch, "score lists differ in length");
  const std::size_t n = scores_a.size();
  if (n < 2) fail(ErrorCode::kInvalidArgument, "paired t-test needs at least two pairs");
  std::vector<double> d(n);
  double mean_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = scores_a[i] - scores_b[i];
    mean_d += d[i];
  }
  mean_d /= static_cast<double>(n);
  if (std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); })) {
    fail(ErrorCode::kDegenerate, "differences are all identical");
  }
  double ss = 0.0;
  for (double v : d) ss += (v - mean_d) * (v - mean_d);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) fail(ErrorCode::kDegenerate, "differences have zero variance");
  const double t = mean_d / (sd / std::sqrt(static_cast<double>(n)));
  return {t, student_t_two_sided_p(t, static_cast<double>(n - 1)), n - 1};
}

}  // namespace whiteprior
