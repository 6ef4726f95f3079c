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

#include <cmath>
#include <optional>
#include <vector>

#include "whiteprior/error.hpp"
#include "whiteprior/image_grid.hpp"
#include "whiteprior/noise.hpp"

namespace whiteprior {

struct NlmParams {
  int patch_radius = 3;    // 7x7 patches
  int search_radius = 10;  // 21x21 search window
  /// Noise level on the [0,1] scale; estimated blindly when absent.
  std::optional<double> sigma;
  /// Weight decay; defaults to kNlmFilterRatio * sigma.
  std::optional<double> filter_h;
};

inline constexpr double kNlmFilterRatio = 0.55;

/// Non-local means with weights exp(-max(d^2 - 2 sigma^2, 0) / h^2), where d^2
/// is the mean squared difference between mirrored 7x7 (by default) patches.
inline ImageGrid nlm_denoise(const ImageGrid& x, const NlmParams& params = {}) {
  if (params.patch_radius < 1 || params.search_radius < params.patch_radius) {
    fail(ErrorCode::kInvalidArgument, "need patch_radius >= 1 and search_radius >= patch_radius");
  }
  const auto side = static_cast<std::size_t>(2 * params.patch_radius + 1);
  if (x.width() <= side || x.height() <= side) {
    fail(ErrorCode::kInvalidArgument, "image too small for the patch size");
  }
  const double sigma = params.sigma ? *params.sigma : estimate_sigma(x);
  if (!(sigma >= 0.0)) fail(ErrorCode::kInvalidArgument, "sigma must be >= 0");
  const double h = params.filter_h ? *params.filter_h : kNlmFilterRatio * sigma;
  if (!(h >= 0.0)) fail(ErrorCode::kInvalidArgument, "filter_h must be >= 0");
  const double inv_h2 = h > 0.0 ? 1.0 / (h * h) : 0.0;
  const double offset = 2.0 * sigma * sigma;

  const long w = static_cast<long>(x.width());
  const long ht = static_cast<long>(x.height());
  const long pr = params.patch_radius;
  const long sr = params.search_radius;
  const long pad = pr + sr;
  const long pw = w + 2 * pad;
  const long ph = ht + 2 * pad;
  std::vector<double> padded(static_cast<std::size_t>(pw * ph));
  for (long r = 0; r < ph; ++r) {
    const std::size_t sr_idx = reflect_index(r - pad, x.height());
    for (long c = 0; c < pw; ++c) {
      padded[static_cast<std::size_t>(r * pw + c)] = x(sr_idx, reflect_index(c - pad, x.width()));
    }
  }
  auto at = [&](long r, long c) { return padded[static_cast<std::size_t>((r + pad) * pw + (c + pad))]; };

  const std::size_t n = x.size();
  std::vector<double> weight_sum(n, 0.0), shift_sum(n, 0.0);
  // Squared differences for one offset over the region patch centres can
  // reach, followed by a summed-area table for the patch means.
  const long rw = w + 2 * pr;
  const long rh = ht + 2 * pr;
  std::vector<double> table(static_cast<std::size_t>((rw + 1) * (rh + 1)));
  const double inv_patch = 1.0 / static_cast<double>(side * side);

  for (long dy = -sr; dy <= sr; ++dy) {
    for (long dx = -sr; dx <= sr; ++dx) {
      for (long r = 0; r < rh; ++r) {
        double row = 0.0;
        for (long c = 0; c < rw; ++c) {
          const double diff = at(r - pr, c - pr) - at(r - pr + dy, c - pr + dx);
          row += diff * diff;
          table[static_cast<std::size_t>((r + 1) * (rw + 1) + c + 1)] =
              table[static_cast<std::size_t>(r * (rw + 1) + c + 1)] + row;
        }
      }
      auto box = [&](long r0, long c0) {
        const long r1 = r0 + static_cast<long>(side);
        const long c1 = c0 + static_cast<long>(side);
        return table[static_cast<std::size_t>(r1 * (rw + 1) + c1)] -
               table[static_cast<std::size_t>(r0 * (rw + 1) + c1)] -
               table[static_cast<std::size_t>(r1 * (rw + 1) + c0)] +
               table[static_cast<std::size_t>(r0 * (rw + 1) + c0)];
      };
      for (long r = 0; r < ht; ++r) {
        for (long c = 0; c < w; ++c) {
          const double d2 = std::max(box(r, c), 0.0) * inv_patch;
          const double excess = std::max(d2 - offset, 0.0);
          double weight;
          if (dy == 0 && dx == 0) {
            weight = 1.0;
          } else if (inv_h2 > 0.0) {
            weight = std::exp(-excess * inv_h2);
          } else {
            weight = excess == 0.0 ? 1.0 : 0.0;
          }
          const std::size_t i = static_cast<std::size_t>(r * w + c);
          weight_sum[i] += weight;
          shift_sum[i] += weight * (at(r + dy, c + dx) - at(r, c));
        }
      }
    }
  }

  ImageGrid out(x.width(), x.height());
  for (std::size_t i = 0; i < n; ++i) {
    out.pixels()[i] = x.pixels()[i] + shift_sum[i] / weight_sum[i];
  }
  return out;
}

}  // namespace whiteprior
