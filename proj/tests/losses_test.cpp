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

#include "whiteprior/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_support.hpp"

namespace whiteprior {
namespace {

using testing::gaussian_grid;
using testing::max_relative_error;
using testing::numeric_gradient;
using testing::random_grid;

constexpr int kGradientSeeds = 10;

DecompositionState random_state(std::uint64_t seed) {
  return {random_grid(8, 8, 1000 + seed), random_grid(8, 8, 2000 + seed, -0.3, 0.3)};
}

// ---------------------------------------------------------------- rec

TEST(RecLossTest, ExactDecompositionIsFree) {
  const ImageGrid x = random_grid(6, 5, 1);
  const ImageGrid s = random_grid(6, 5, 2);
  const auto r = rec_loss(x, {s, x - s});
  EXPECT_NEAR(r.value, 0.0, 1e-30);
  EXPECT_LT(testing::max_abs_difference(r.grad_signal, ImageGrid(6, 5)), 1e-15);
}

TEST(RecLossTest, ConstantResidual) {
  const ImageGrid x(4, 4, 0.5);
  EXPECT_DOUBLE_EQ(rec_loss(x, {ImageGrid(4, 4), ImageGrid(4, 4)}).value, 0.25);
}

TEST(RecLossTest, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kGradientSeeds; ++seed) {
    const ImageGrid x = random_grid(8, 8, 3000 + seed);
    const DecompositionState st = random_state(seed);
    const auto r = rec_loss(x, st);
    const ImageGrid fd_s = numeric_gradient([&](const ImageGrid& s) { return rec_loss(x, {s, st.noise}).value; },
                                            st.signal, 1e-6);
    const ImageGrid fd_n = numeric_gradient([&](const ImageGrid& n) { return rec_loss(x, {st.signal, n}).value; },
                                            st.noise, 1e-6);
    EXPECT_LT(max_relative_error(r.grad_signal, fd_s), 1e-6);
    EXPECT_LT(max_relative_error(r.grad_noise, fd_n), 1e-6);
  }
}

TEST(RecLossTest, JointlyConvex) {
  const ImageGrid x = random_grid(8, 8, 5);
  for (int seed = 0; seed < 10; ++seed) {
    const DecompositionState a = random_state(seed);
    const DecompositionState b = random_state(seed + 100);
    const DecompositionState mid{0.5 * (a.signal + b.signal), 0.5 * (a.noise + b.noise)};
    EXPECT_LE(rec_loss(x, mid).value, 0.5 * (rec_loss(x, a).value + rec_loss(x, b).value) + 1e-15);
  }
}

TEST(RecLossTest, DimensionMismatch) {
  EXPECT_THROW(rec_loss(ImageGrid(3, 3), {ImageGrid(3, 3), ImageGrid(3, 4)}), Error);
}

// ---------------------------------------------------------------- ac

TEST(AcLossTest, ZeroNoise) {
  const auto r = ac_loss(ImageGrid(5, 5), {{0, 1}, {2, -1}});
  EXPECT_EQ(r.value, 0.0);
  for (double v : r.grad.pixels()) EXPECT_EQ(v, 0.0);
}

TEST(AcLossTest, HandWorkedCheckerboard) {
  const ImageGrid n = ImageGrid::from_rows({{1.0, -1.0}, {-1.0, 1.0}});
  // Brute force with the reflected copy: column 2 reads column 0.
  const double brute = (n(0, 0) * n(0, 1) + n(0, 1) * n(0, 0) + n(1, 0) * n(1, 1) + n(1, 1) * n(1, 0)) / 4.0;
  EXPECT_EQ(brute, -1.0);
  EXPECT_EQ(sample_autocorrelation(n, {0, 1}), brute);
  EXPECT_EQ(ac_loss(n, {{0, 1}}).value, brute * brute);
}

TEST(AcLossTest, RejectsBadLags) {
  const ImageGrid n(4, 4, 0.1);
  EXPECT_THROW(ac_loss(n, {}), Error);
  EXPECT_THROW(ac_loss(n, {{0, 0}}), Error);
  EXPECT_THROW(ac_loss(n, {{4, 0}}), Error);
  EXPECT_THROW(ac_loss(n, {{0, -4}}), Error);
}

TEST(AcLossTest, WhiteNoiseIsNearlyUncorrelated) {
  const double sigma = 0.1;
  const double bound = 3.0 * sigma * sigma / 128.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ImageGrid n = gaussian_grid(128, 128, seed, sigma);
    EXPECT_LT(std::abs(sample_autocorrelation(n, {0, 1})), bound) << seed;
    EXPECT_LT(std::abs(sample_autocorrelation(n, {1, 0})), bound) << seed;
  }
}

TEST(AcLossTest, GradientMatchesFiniteDifferences) {
  const std::vector<Lag> lags{{0, 1}, {2, -3}, {-1, 0}, {7, 7}};
  for (int seed = 0; seed < kGradientSeeds; ++seed) {
    const ImageGrid n = random_grid(8, 8, 4000 + seed, -1.0, 1.0);
    for (const auto& set : {std::vector<Lag>{lags[seed % 4]}, lags}) {
      const auto r = ac_loss(n, set);
      const ImageGrid fd = numeric_gradient([&](const ImageGrid& g) { return ac_loss(g, set).value; }, n, 1e-5);
      EXPECT_LT(max_relative_error(r.grad, fd), 1e-4) << seed;
    }
  }
}

TEST(AcLossTest, QuarticInScale) {
  const ImageGrid n = random_grid(9, 7, 8, -1.0, 1.0);
  const std::vector<Lag> lags{{1, 2}, {0, -1}};
  for (double a : {0.5, 2.0, 3.0}) {
    EXPECT_NEAR(ac_loss(a * n, lags).value, std::pow(a, 4) * ac_loss(n, lags).value,
                1e-12 * std::pow(a, 4));
  }
}

ImageGrid rotate_half_turn(const ImageGrid& g) {
  ImageGrid out(g.width(), g.height());
  for (std::size_t r = 0; r < g.height(); ++r)
    for (std::size_t c = 0; c < g.width(); ++c) out(r, c) = g(g.height() - 1 - r, g.width() - 1 - c);
  return out;
}

// Negating the lag is the same as rotating the field by a half turn, because
// reflect padding commutes with the rotation.
TEST(AcLossTest, NegatedLagEqualsHalfTurnRotation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImageGrid n = random_grid(8, 6, seed, -1.0, 1.0);
    for (const Lag lag : {Lag{0, 1}, Lag{1, 0}, Lag{2, -3}, Lag{-4, 5}}) {
      EXPECT_NEAR(ac_loss(n, {{-lag.row, -lag.col}}).value, ac_loss(rotate_half_turn(n), {lag}).value, 1e-12);
    }
  }
}

TEST(AcLossTest, SymmetricUnderLagNegationForHalfTurnSymmetricFields) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImageGrid base = random_grid(8, 8, seed, -1.0, 1.0);
    const ImageGrid n = base + rotate_half_turn(base);
    for (const Lag lag : {Lag{0, 1}, Lag{1, 1}, Lag{3, -2}}) {
      EXPECT_NEAR(ac_loss(n, {lag}).value, ac_loss(n, {{-lag.row, -lag.col}}).value, 1e-12);
    }
  }
}

// For general fields the two signs differ only through pairs that touch the
// reflected border: at most (|l| W + |m| H) of the M products.
TEST(AcLossTest, LagNegationDiffersOnlyThroughBorderPairs) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImageGrid n = random_grid(16, 16, seed, -1.0, 1.0);
    for (const Lag lag : {Lag{0, 1}, Lag{2, 3}}) {
      const double diff = std::abs(sample_autocorrelation(n, lag) - sample_autocorrelation(n, {-lag.row, -lag.col}));
      const double border = 2.0 * (std::abs(lag.row) * 16.0 + std::abs(lag.col) * 16.0) / 256.0;
      EXPECT_LE(diff, border);
    }
  }
}

// ---------------------------------------------------------------- st

TEST(StLossTest, TiledBlocksSitAtTheFloor) {
  const ImageGrid tile = random_grid(4, 4, 3, -1.0, 1.0);
  ImageGrid n(16, 12);
  for (std::size_t r = 0; r < 12; ++r)
    for (std::size_t c = 0; c < 16; ++c) n(r, c) = tile(r % 4, c % 4);
  EXPECT_NEAR(st_loss(n, 4, 1e-8).value, std::log(12.0), 1e-9);
}

TEST(StLossTest, HeteroscedasticBlockRaisesTheLoss) {
  ImageGrid n(4, 4);
  n(0, 0) = 1.0;
  n(0, 1) = -1.0;
  n(1, 0) = -1.0;
  n(1, 1) = 1.0;
  const double eps = 1e-8;
  // Direct softmax / cross-entropy with sigma = (sqrt(1+eps), sqrt(eps) x 3).
  const double s[4] = {std::sqrt(1.0 + eps), std::sqrt(eps), std::sqrt(eps), std::sqrt(eps)};
  double z = 0.0;
  for (double v : s) z += std::exp(v);
  double expected = 0.0;
  for (double v : s) expected -= std::log(std::exp(v) / z) / 4.0;
  const double value = st_loss(n, 2, eps).value;
  EXPECT_NEAR(value, expected, 1e-12);
  EXPECT_GT(value, std::log(4.0));
}

TEST(StLossTest, NeverBelowLogB) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ImageGrid n = random_grid(20, 18, seed, -1.0, 1.0);
    for (std::size_t b : {2u, 4u, 8u}) {
      EXPECT_GE(st_loss(n, b, 1e-8).value, std::log(static_cast<double>(block_count(20, 18, b))) - 1e-12);
    }
  }
}

TEST(StLossTest, DropsPartialBlocks) {
  // Anything in the trailing strip must not influence the value.
  ImageGrid a = random_grid(9, 9, 1, -1.0, 1.0);
  ImageGrid b = a;
  for (std::size_t i = 0; i < 9; ++i) {
    b(8, i) = 100.0;
    b(i, 8) = -100.0;
  }
  EXPECT_EQ(st_loss(a, 4, 1e-8).value, st_loss(b, 4, 1e-8).value);
  EXPECT_EQ(st_loss(b, 4, 1e-8).grad(8, 3), 0.0);
}

TEST(StLossTest, RequiresTwoBlocks) {
  EXPECT_THROW(st_loss(ImageGrid(3, 3), 2, 1e-8), Error);
  EXPECT_THROW(st_loss(ImageGrid(8, 8), 1, 1e-8), Error);
  EXPECT_NO_THROW(st_loss(ImageGrid(4, 2), 2, 1e-8));
}

TEST(StLossTest, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kGradientSeeds; ++seed) {
    const ImageGrid n = random_grid(8, 8, 5000 + seed, -1.0, 1.0);
    for (std::size_t b : {2u, 4u}) {
      const auto r = st_loss(n, b, 1e-8);
      const ImageGrid fd = numeric_gradient([&](const ImageGrid& g) { return st_loss(g, b, 1e-8).value; }, n, 1e-6);
      EXPECT_LT(max_relative_error(r.grad, fd), 1e-4) << seed << " b=" << b;
    }
  }
}

TEST(StLossTest, TemperatureGradientMatchesFiniteDifferences) {
  const ImageGrid n = random_grid(8, 8, 17, -1.0, 1.0);
  const auto r = st_loss(n, 2, 1e-8, 0.25);
  const ImageGrid fd = numeric_gradient([&](const ImageGrid& g) { return st_loss(g, 2, 1e-8, 0.25).value; }, n, 1e-6);
  EXPECT_LT(max_relative_error(r.grad, fd), 1e-4);
}

// ---------------------------------------------------------------- pc

TEST(PcLossTest, MatchingOrShiftedSignalIsFree) {
  const ImageGrid m = random_grid(7, 5, 2);
  EXPECT_EQ(pc_loss(m, m).value, 0.0);
  EXPECT_NEAR(pc_loss(m + 0.3, m).value, 0.0, 1e-30);
}

TEST(PcLossTest, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < kGradientSeeds; ++seed) {
    const ImageGrid s = random_grid(8, 8, 6000 + seed);
    const ImageGrid m = random_grid(8, 8, 7000 + seed);
    const auto r = pc_loss(s, m);
    const ImageGrid fd = numeric_gradient([&](const ImageGrid& g) { return pc_loss(g, m).value; }, s, 1e-6);
    EXPECT_LT(max_relative_error(r.grad, fd), 1e-6) << seed;
  }
}

TEST(PcLossTest, InvariantToGlobalOffset) {
  const ImageGrid s = random_grid(8, 8, 3);
  const ImageGrid m = random_grid(8, 8, 4);
  EXPECT_NEAR(pc_loss(s + 0.7, m).value, pc_loss(s, m).value, 1e-12);
}

TEST(PcLossTest, DimensionMismatch) {
  EXPECT_THROW(pc_loss(ImageGrid(3, 3), ImageGrid(4, 3)), Error);
}

// ---------------------------------------------------------------- tv

TEST(TvLossTest, ConstantSignalIsFree) {
  EXPECT_EQ(tv_loss(ImageGrid(6, 6, 0.2), 1e-6).value, 0.0);
}

TEST(TvLossTest, RampApproachesAbsoluteSum) {
  const double c = 0.2;
  const ImageGrid ramp = ImageGrid::from_rows({{0.0, c, 2 * c, 3 * c}});
  EXPECT_NEAR(tv_loss(ramp, 1e-12).value, 3 * c / 4, 1e-12);
  EXPECT_NEAR(tv_loss(ramp, 1e-6).value, 3 * c / 4, 1e-6);
}

TEST(TvLossTest, InvariantToGlobalOffset) {
  const ImageGrid s = random_grid(8, 8, 3);
  EXPECT_NEAR(tv_loss(s + 0.4, 1e-6).value, tv_loss(s, 1e-6).value, 1e-12);
}

TEST(TvLossTest, GradientMatchesFiniteDifferencesAwayFromKinks) {
  const double eps = 1e-6;
  for (int seed = 0; seed < kGradientSeeds; ++seed) {
    const ImageGrid s = random_grid(8, 8, 8000 + seed);
    const auto r = tv_loss(s, eps);
    const ImageGrid fd = numeric_gradient([&](const ImageGrid& g) { return tv_loss(g, eps).value; }, s, 1e-5);
    auto near_kink = [&](std::size_t i) { return testing::fd_stencil_near_kink(s, i, 1e-5, 10 * eps); };
    EXPECT_LT(max_relative_error(r.grad, fd, 1e-2, near_kink), 1e-3) << seed;
  }
}

TEST(TvLossTest, RejectsNonPositiveEpsilon) {
  EXPECT_THROW(tv_loss(ImageGrid(3, 3), 0.0), Error);
}

// ---------------------------------------------------------------- composite

LossConfig only_rec() {
  LossConfig c;
  c.weight_ac = c.weight_st = c.weight_pc = c.weight_tv = 0.0;
  return c;
}

TEST(TotalLossTest, SwitchboardWithOnlyReconstruction) {
  const ImageGrid x = random_grid(8, 8, 1);
  const DecompositionState st = random_state(3);
  const auto t = total_loss(x, st, ImageGrid(8, 8), only_rec(), {{{0, 1}}, 2});
  const auto r = rec_loss(x, st);
  EXPECT_EQ(t.total, r.value);
  EXPECT_EQ(t.grad_signal, r.grad_signal);
  EXPECT_EQ(t.grad_noise, r.grad_noise);
  EXPECT_TRUE(t.per_term.rec.has_value());
  EXPECT_FALSE(t.per_term.ac || t.per_term.st || t.per_term.pc || t.per_term.tv);
}

TEST(TotalLossTest, SignalTermsVanishOnAFlatExactDecomposition) {
  const ImageGrid x = random_grid(8, 8, 2);
  const ImageGrid m(8, 8, mean(x));
  const DecompositionState st{m, x - m};
  const LossConfig cfg;  // weights 1, 1, 1, 1, 5e-5
  const StochasticDraw draw{{{1, 2}}, 4};
  const auto t = total_loss(x, st, m, cfg, draw);
  EXPECT_EQ(*t.per_term.pc, 0.0);
  EXPECT_EQ(*t.per_term.tv, 0.0);
  EXPECT_NEAR(*t.per_term.rec, 0.0, 1e-30);
  EXPECT_NEAR(t.total, cfg.weight_ac * *t.per_term.ac + cfg.weight_st * *t.per_term.st, 1e-15);
}

TEST(TotalLossTest, TotalIsTheWeightedSumOfTerms) {
  LossConfig cfg;
  cfg.weight_rec = 0.7;
  cfg.weight_ac = 3.0;
  cfg.weight_st = 0.2;
  cfg.weight_pc = 1.5;
  cfg.weight_tv = 0.01;
  for (int seed = 0; seed < 5; ++seed) {
    const ImageGrid x = random_grid(8, 8, 10 + seed);
    const auto t = total_loss(x, random_state(seed), random_grid(8, 8, 20 + seed), cfg, {{{0, 1}, {2, 2}}, 2});
    const double independent = cfg.weight_rec * *t.per_term.rec + cfg.weight_ac * *t.per_term.ac +
                               cfg.weight_st * *t.per_term.st + cfg.weight_pc * *t.per_term.pc +
                               cfg.weight_tv * *t.per_term.tv;
    EXPECT_NEAR(t.total, independent, 1e-12);
  }
}

TEST(TotalLossTest, CompositeGradientMatchesFiniteDifferences) {
  LossConfig cfg;
  cfg.weight_tv = 0.1;
  const StochasticDraw draw{{{0, 1}, {-2, 1}}, 2};
  for (int seed = 0; seed < kGradientSeeds; ++seed) {
    const ImageGrid x = random_grid(8, 8, 30 + seed);
    const ImageGrid m = random_grid(8, 8, 40 + seed);
    const DecompositionState st = random_state(seed);
    const auto t = total_loss(x, st, m, cfg, draw);
    const ImageGrid fd_n = numeric_gradient(
        [&](const ImageGrid& n) { return total_loss(x, {st.signal, n}, m, cfg, draw).total; }, st.noise, 1e-6);
    EXPECT_LT(max_relative_error(t.grad_noise, fd_n), 1e-4) << seed;
  }
}

TEST(TotalLossTest, RejectsAllZeroWeights) {
  LossConfig cfg = only_rec();
  cfg.weight_rec = 0.0;
  EXPECT_THROW(total_loss(ImageGrid(4, 4), {ImageGrid(4, 4), ImageGrid(4, 4)}, ImageGrid(4, 4), cfg, {{{0, 1}}, 2}),
               Error);
}

TEST(StochasticDrawTest, LagsAndBlocksStayInRange) {
  LossConfig cfg;
  cfg.ac_lags_per_step = 3;
  CounterRng rng(5, StreamTag::kStochasticDraw);
  bool saw_negative = false;
  for (int i = 0; i < 500; ++i) {
    const StochasticDraw d = draw_stochastic(rng, cfg, 40, 20);
    ASSERT_EQ(d.lags.size(), 3u);
    for (const Lag& l : d.lags) {
      EXPECT_FALSE(l.row == 0 && l.col == 0);
      EXPECT_LE(std::abs(l.row), 16);
      EXPECT_LE(std::abs(l.col), 16);
      saw_negative = saw_negative || l.row < 0 || l.col < 0;
    }
    // 16x16 blocks leave only 2x1 = 2 blocks in 40x20; still feasible.
    EXPECT_GE(block_count(40, 20, d.block_size), 2u);
  }
  EXPECT_TRUE(saw_negative);
}

TEST(StochasticDrawTest, ClipsLagsAndBlocksToSmallGrids) {
  LossConfig cfg;
  CounterRng rng(1, StreamTag::kStochasticDraw);
  for (int i = 0; i < 200; ++i) {
    const StochasticDraw d = draw_stochastic(rng, cfg, 5, 7);
    EXPECT_LE(std::abs(d.lags[0].row), 6);
    EXPECT_LE(std::abs(d.lags[0].col), 4);
    EXPECT_EQ(d.block_size, 2u);  // a 4x4 block fits only once
  }
}

}  // namespace
}  // namespace whiteprior
