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

#include "whiteprior/noise.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "test_support.hpp"
#include "whiteprior/losses.hpp"

namespace whiteprior {
namespace {

TEST(AwgnTest, RejectsNonPositiveSigma) {
  const ImageGrid g(4, 4, 0.5);
  EXPECT_THROW(add_awgn(g, {0.0, 1}), Error);
  EXPECT_THROW(add_awgn(g, {-0.1, 1}), Error);
}

TEST(AwgnTest, VanishingSigmaLeavesImageUnchanged) {
  const ImageGrid clean = testing::random_grid(16, 16, 3);
  EXPECT_LT(testing::max_abs_difference(add_awgn(clean, {1e-15, 9}), clean), 1e-12);
}

TEST(AwgnTest, SameSeedIsBitIdentical) {
  const ImageGrid clean = testing::random_grid(32, 16, 1);
  EXPECT_EQ(add_awgn(clean, {0.1, 42}), add_awgn(clean, {0.1, 42}));
  EXPECT_NE(add_awgn(clean, {0.1, 42}), add_awgn(clean, {0.1, 43}));
}

TEST(AwgnTest, RealizationIndependentOfContent) {
  const ImageGrid a = testing::random_grid(20, 10, 1);
  const ImageGrid b = testing::random_grid(20, 10, 2);
  const ImageGrid field = awgn_field(20, 10, {0.2, 5});
  EXPECT_EQ(add_awgn(a, {0.2, 5}), a + field);
  EXPECT_EQ(add_awgn(b, {0.2, 5}), b + field);
}

TEST(AwgnTest, MomentsMatchTheModel) {
  const ImageGrid clean(256, 256, 0.5);
  const ImageGrid noise = add_awgn(clean, {0.1, 2024}) - clean;
  const double m = mean(noise);
  double ss = 0.0;
  for (double v : noise.pixels()) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(noise.size() - 1));
  EXPECT_LT(std::abs(m), 0.002);
  EXPECT_GE(sd, 0.098);
  EXPECT_LE(sd, 0.102);
}

TEST(EstimateSigmaTest, ConstantImageIsNoiseless) {
  EXPECT_EQ(estimate_sigma(ImageGrid(10, 12, 0.3)), 0.0);
}

TEST(EstimateSigmaTest, TooSmallIsAnError) {
  EXPECT_THROW(estimate_sigma(ImageGrid(2, 5, 0.3)), Error);
}

TEST(EstimateSigmaTest, RecoversSigmaOfPureNoise) {
  const ImageGrid clean(256, 256, 0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double est = estimate_sigma(add_awgn(clean, {0.1, seed}));
    EXPECT_GE(est, 0.09) << seed;
    EXPECT_LE(est, 0.11) << seed;
  }
}

TEST(EstimateSigmaTest, AxisAlignedStepIsInvisibleButDiagonalEdgeLeaks) {
  // The mask is a product of second differences in x and y, so an image that
  // is constant along either axis produces no response.
  ImageGrid vertical(16, 16), diagonal(16, 16);
  for (std::size_t r = 0; r < 16; ++r) {
    for (std::size_t c = 0; c < 16; ++c) {
      vertical(r, c) = c < 8 ? 0.0 : 1.0;
      diagonal(r, c) = c > r ? 1.0 : 0.0;
    }
  }
  EXPECT_EQ(estimate_sigma(vertical), 0.0);
  EXPECT_GT(estimate_sigma(diagonal), 0.0);
}

TEST(EstimateSigmaTest, ScalesLinearlyOnPureNoise) {
  const ImageGrid g = testing::gaussian_grid(64, 64, 7, 0.1);
  const double base = estimate_sigma(g);
  for (double a : {0.5, 2.0}) {
    EXPECT_NEAR(estimate_sigma(a * g), a * base, 0.02 * a * base);
  }
}

TEST(PhantomTest, RequiresTwoRegions) {
  PhantomSpec spec;
  spec.region_count = 1;
  EXPECT_THROW(generate_phantom(spec), Error);
}

TEST(PhantomTest, UsesExactlyTheGivenLevels) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImageGrid p = generate_phantom({32, 24, 2, {0.2, 0.8}, seed});
    const std::set<double> values(p.pixels().begin(), p.pixels().end());
    EXPECT_EQ(values, (std::set<double>{0.2, 0.8})) << seed;
  }
}

TEST(PhantomTest, IsDeterministic) {
  const PhantomSpec spec{64, 48, 6, {0.1, 0.4, 0.9}, 77};
  EXPECT_EQ(generate_phantom(spec), generate_phantom(spec));
  PhantomSpec other = spec;
  other.seed = 78;
  EXPECT_NE(generate_phantom(spec), generate_phantom(other));
}

TEST(PhantomTest, TotalVariationWithinPerimeterBound) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PhantomSpec spec{128, 128, 5, {0.1, 0.3, 0.5, 0.7, 0.9}, seed};
    const ImageGrid p = generate_phantom(spec);
    // Oracle: walk every horizontal and vertical neighbour pair and add the
    // jump wherever the two pixels differ.
    double jumps = 0.0;
    std::size_t boundary_pairs = 0;
    for (std::size_t r = 0; r < p.height(); ++r) {
      for (std::size_t c = 0; c < p.width(); ++c) {
        if (c + 1 < p.width() && p(r, c + 1) != p(r, c)) {
          jumps += std::abs(p(r, c + 1) - p(r, c));
          ++boundary_pairs;
        }
        if (r + 1 < p.height() && p(r + 1, c) != p(r, c)) {
          jumps += std::abs(p(r + 1, c) - p(r, c));
          ++boundary_pairs;
        }
      }
    }
    const double m = static_cast<double>(p.size());
    const double tv = tv_loss(p, 1e-12).value;
    EXPECT_NEAR(tv, jumps / m, 1e-9);
    EXPECT_LE(tv, 2.0 * 5.0 * 128.0 / m) << seed;
    EXPECT_GT(boundary_pairs, 0u);
  }
}

TEST(PhantomTest, DifferencesAreLevelJumps) {
  const std::vector<double> levels{0.1, 0.3, 0.5, 0.7, 0.9};
  const ImageGrid p = generate_phantom({64, 64, 5, levels, 3});
  std::set<double> allowed;
  for (double a : levels)
    for (double b : levels) allowed.insert(b - a);
  std::size_t nonzero = 0;
  for (const ImageGrid& d : {forward_diff_x(p), forward_diff_y(p)}) {
    for (double v : d.pixels()) {
      if (v != 0.0) {
        ++nonzero;
        EXPECT_TRUE(allowed.count(v)) << v;
      }
    }
  }
  EXPECT_LT(nonzero, p.size() / 4);
}

}  // namespace
}  // namespace whiteprior
