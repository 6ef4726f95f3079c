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
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "whiteprior/error.hpp"
#include "whiteprior/image_grid.hpp"
#include "whiteprior/random.hpp"

namespace whiteprior {

struct NoiseModel {
  double sigma = 0.1;  // on the [0,1] intensity scale
  std::uint64_t seed = 0;
};

/// The Gaussian field add_awgn adds for `model`, independent of image content.
inline ImageGrid awgn_field(std::size_t width, std::size_t height, const NoiseModel& model) {
  if (!(model.sigma > 0.0) || !std::isfinite(model.sigma)) {
    fail(ErrorCode::kInvalidArgument, "noise sigma must be positive and finite");
  }
  CounterRng rng(model.seed, StreamTag::kAwgn);
  ImageGrid field(width, height);
  for (double& v : field.pixels()) v = model.sigma * rng.normal();
  return field;
}

/// clean + N(0, sigma^2) per pixel. The result is deliberately left unclipped.
inline ImageGrid add_awgn(const ImageGrid& clean, const NoiseModel& model) {
  return clean + awgn_field(clean.width(), clean.height(), model);
}

/// Blind noise standard deviation from the fast Laplacian-difference
/// estimator: sqrt(pi/2) / (6 (W-2)(H-2)) * sum |x * L| over interior pixels,
/// L = [1 -2 1; -2 4 -2; 1 -2 1]. Edges not aligned with an axis bias it upward.
inline double estimate_sigma(const ImageGrid& noisy) {
  if (noisy.width() < 3 || noisy.height() < 3) {
    fail(ErrorCode::kInvalidArgument, "estimate_sigma needs at least a 3x3 grid");
  }
  static constexpr double kMask[3][3] = {{1, -2, 1}, {-2, 4, -2}, {1, -2, 1}};
  double total = 0.0;
  for (std::size_t r = 1; r + 1 < noisy.height(); ++r) {
    for (std::size_t c = 1; c + 1 < noisy.width(); ++c) {
      double acc = 0.0;
      for (int dr = 0; dr < 3; ++dr) {
        for (int dc = 0; dc < 3; ++dc) {
          acc += kMask[dr][dc] * noisy(r + dr - 1, c + dc - 1);
        }
      }
      total += std::abs(acc);
    }
  }
  const double interior =
      static_cast<double>((noisy.width() - 2) * (noisy.height() - 2));
  return std::sqrt(std::numbers::pi / 2.0) * total / (6.0 * interior);
}

struct PhantomSpec {
  std::size_t width = 128;
  std::size_t height = 128;
  std::size_t region_count = 5;
  std::vector<double> intensity_levels{0.1, 0.3, 0.5, 0.7, 0.9};
  std::uint64_t seed = 0;
};

/// Piecewise-constant Voronoi image: `region_count` distinct seed pixels, each
/// pixel takes the level of its nearest site (lowest index on ties). Regions
/// use levels in order while they last, then sample levels with replacement.
inline ImageGrid generate_phantom(const PhantomSpec& spec) {
  if (spec.region_count < 2) fail(ErrorCode::kInvalidArgument, "region_count must be >= 2");
  if (spec.width == 0 || spec.height == 0) {
    fail(ErrorCode::kInvalidArgument, "phantom dimensions must be positive");
  }
  if (spec.region_count > spec.width * spec.height) {
    fail(ErrorCode::kInvalidArgument, "more regions than pixels");
  }
  if (spec.intensity_levels.empty()) fail(ErrorCode::kInvalidArgument, "no intensity levels");
  for (double v : spec.intensity_levels) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::kOutOfRange, "intensity level outside [0,1]");
  }

  CounterRng rng(spec.seed, StreamTag::kPhantom);
  std::vector<std::pair<long, long>> sites;
  std::set<std::pair<long, long>> taken;
  while (sites.size() < spec.region_count) {
    const auto r = static_cast<long>(rng.below(spec.height));
    const auto c = static_cast<long>(rng.below(spec.width));
    if (taken.insert({r, c}).second) sites.emplace_back(r, c);
  }
  std::vector<double> level(spec.region_count);
  for (std::size_t k = 0; k < spec.region_count; ++k) {
    level[k] = k < spec.intensity_levels.size()
                   ? spec.intensity_levels[k]
                   : spec.intensity_levels[rng.below(spec.intensity_levels.size())];
  }

  ImageGrid out(spec.width, spec.height);
  for (std::size_t r = 0; r < spec.height; ++r) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      long best = std::numeric_limits<long>::max();
      std::size_t owner = 0;
      for (std::size_t k = 0; k < sites.size(); ++k) {
        const long dr = static_cast<long>(r) - sites[k].first;
        const long dc = static_cast<long>(c) - sites[k].second;
        const long d2 = dr * dr + dc * dc;
        if (d2 < best) {
          best = d2;
          owner = k;
        }
      }
      out(r, c) = level[owner];
    }
  }
  return out;
}

}  // namespace whiteprior
