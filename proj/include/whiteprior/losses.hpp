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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "whiteprior/error.hpp"
#include "whiteprior/image_grid.hpp"
#include "whiteprior/random.hpp"

namespace whiteprior {

/// The optimization variable: signal S and noise N for one observation X.
struct DecompositionState {
  ImageGrid signal;
  ImageGrid noise;
};

/// Spatial lag (row offset, column offset).
struct Lag {
  int row = 0;
  int col = 0;

  friend bool operator==(const Lag&, const Lag&) = default;
};

struct LossConfig {
  double weight_rec = 1.0;
  double weight_ac = 1.0;
  double weight_st = 1.0;
  double weight_pc = 1.0;
  double weight_tv = 5e-5;
  int ac_max_lag = 16;
  int ac_lags_per_step = 1;
  std::vector<std::size_t> st_block_sizes{2, 4, 8, 16};
  double tv_epsilon = 1e-6;
  double st_epsilon = 1e-8;
  double st_temperature = 1.0;

  void validate() const {
    const double weights[] = {weight_rec, weight_ac, weight_st, weight_pc, weight_tv};
    bool any = false;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::kConfig, "loss weights must be finite and >= 0");
      any = any || w > 0.0;
    }
    if (!any) fail(ErrorCode::kConfig, "at least one loss weight must be positive");
    if (ac_max_lag < 1 || ac_lags_per_step < 1) fail(ErrorCode::kConfig, "lag settings must be positive");
    if (st_block_sizes.empty()) fail(ErrorCode::kConfig, "st_block_sizes is empty");
    for (std::size_t b : st_block_sizes) {
      if (b < 2) fail(ErrorCode::kConfig, "block sizes must be >= 2");
    }
    if (!(tv_epsilon > 0.0) || !(st_epsilon > 0.0) || !(st_temperature > 0.0)) {
      fail(ErrorCode::kConfig, "tv_epsilon, st_epsilon and st_temperature must be positive");
    }
  }
};

/// Random quantities consumed by one evaluation of the composite loss.
struct StochasticDraw {
  std::vector<Lag> lags;
  std::size_t block_size = 2;
};

/// Unweighted term values; a term skipped because its weight is zero stays empty.
struct TermValues {
  std::optional<double> rec, ac, st, pc, tv;
};

struct LossBreakdown {
  double total = 0.0;
  TermValues per_term;
  ImageGrid grad_signal;
  ImageGrid grad_noise;
};

struct TermGradient {
  double value = 0.0;
  ImageGrid grad;
};

struct ReconstructionGradient {
  double value = 0.0;
  ImageGrid grad_signal;
  ImageGrid grad_noise;
};

/// Mean squared reconstruction error (1/M) sum (x - s - n)^2.
inline ReconstructionGradient rec_loss(const ImageGrid& x, const DecompositionState& state) {
  x.require_same_shape(state.signal);
  x.require_same_shape(state.noise);
  const double inv_m = 1.0 / static_cast<double>(x.size());
  ReconstructionGradient out{0.0, ImageGrid(x.width(), x.height()), ImageGrid()};
  auto xs = x.pixels();
  auto ss = state.signal.pixels();
  auto ns = state.noise.pixels();
  auto gs = out.grad_signal.pixels();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = xs[i] - ss[i] - ns[i];
    out.value += r * r;
    gs[i] = -2.0 * inv_m * r;
  }
  out.value *= inv_m;
  out.grad_noise = out.grad_signal;
  return out;
}

/// Sample autocorrelation (1/M) sum_i n(i) * n~(i + lag) against the
/// reflect-padded field n~.
inline double sample_autocorrelation(const ImageGrid& n, Lag lag) {
  double acc = 0.0;
  for (std::size_t r = 0; r < n.height(); ++r) {
    const std::size_t rr = reflect_index(static_cast<long>(r) + lag.row, n.height());
    for (std::size_t c = 0; c < n.width(); ++c) {
      const std::size_t cc = reflect_index(static_cast<long>(c) + lag.col, n.width());
      acc += n(r, c) * n(rr, cc);
    }
  }
  return acc / static_cast<double>(n.size());
}

inline void check_lag(const ImageGrid& n, Lag lag) {
  if (lag.row == 0 && lag.col == 0) fail(ErrorCode::kInvalidArgument, "lag (0,0) is not a whiteness constraint");
  if (static_cast<std::size_t>(std::abs(lag.row)) >= n.height() ||
      static_cast<std::size_t>(std::abs(lag.col)) >= n.width()) {
    fail(ErrorCode::kInvalidArgument, "lag exceeds grid extent");
  }
}

/// Whiteness penalty: mean over the given lags of R(lag)^2. The gradient
/// folds every reflected read back onto the pixel it was read from.
inline TermGradient ac_loss(const ImageGrid& n, const std::vector<Lag>& lags) {
  if (lags.empty()) fail(ErrorCode::kInvalidArgument, "empty lag list");
  for (const Lag& lag : lags) check_lag(n, lag);

  const double inv_m = 1.0 / static_cast<double>(n.size());
  const double inv_l = 1.0 / static_cast<double>(lags.size());
  TermGradient out{0.0, ImageGrid(n.width(), n.height())};
  std::vector<std::size_t> col_map(n.width());
  for (const Lag& lag : lags) {
    const double corr = sample_autocorrelation(n, lag);
    out.value += corr * corr * inv_l;
    const double coef = 2.0 * corr * inv_m * inv_l;
    if (coef == 0.0) continue;
    for (std::size_t c = 0; c < n.width(); ++c) {
      col_map[c] = reflect_index(static_cast<long>(c) + lag.col, n.width());
    }
    for (std::size_t r = 0; r < n.height(); ++r) {
      const std::size_t rr = reflect_index(static_cast<long>(r) + lag.row, n.height());
      for (std::size_t c = 0; c < n.width(); ++c) {
        const std::size_t cc = col_map[c];
        out.grad(r, c) += coef * n(rr, cc);
        out.grad(rr, cc) += coef * n(r, c);
      }
    }
  }
  return out;
}

/// Number of complete b x b blocks that fit in a grid.
inline std::size_t block_count(std::size_t width, std::size_t height, std::size_t b) {
  return b == 0 ? 0 : (width / b) * (height / b);
}

/// Stationarity penalty: cross-entropy between the uniform distribution and
/// the softmax of per-block standard deviations, -(1/B) sum log psi_b.
/// Its minimum, log B, is reached when every block has the same spread.
/// Trailing partial blocks are ignored.
inline TermGradient st_loss(const ImageGrid& n, std::size_t block_size, double st_epsilon,
                            double temperature = 1.0) {
  if (block_size < 2) fail(ErrorCode::kInvalidArgument, "block size must be >= 2");
  const std::size_t bx = n.width() / block_size;
  const std::size_t by = n.height() / block_size;
  const std::size_t blocks = bx * by;
  if (blocks < 2) fail(ErrorCode::kInvalidArgument, "fewer than two complete blocks");

  const double inv_area = 1.0 / static_cast<double>(block_size * block_size);
  std::vector<double> mean_b(blocks), sd_b(blocks);
  for (std::size_t k = 0; k < blocks; ++k) {
    const std::size_t r0 = (k / bx) * block_size;
    const std::size_t c0 = (k % bx) * block_size;
    double s = 0.0;
    for (std::size_t r = r0; r < r0 + block_size; ++r)
      for (std::size_t c = c0; c < c0 + block_size; ++c) s += n(r, c);
    const double mu = s * inv_area;
    double v = 0.0;
    for (std::size_t r = r0; r < r0 + block_size; ++r)
      for (std::size_t c = c0; c < c0 + block_size; ++c) v += (n(r, c) - mu) * (n(r, c) - mu);
    mean_b[k] = mu;
    sd_b[k] = std::sqrt(v * inv_area + st_epsilon);
  }

  // log-sum-exp of the scaled deviations, shifted by the max for stability.
  const double top = *std::max_element(sd_b.begin(), sd_b.end()) / temperature;
  double z = 0.0, mean_logit = 0.0;
  for (double s : sd_b) {
    z += std::exp(s / temperature - top);
    mean_logit += s / temperature;
  }
  mean_logit /= static_cast<double>(blocks);
  const double log_z = top + std::log(z);

  TermGradient out{log_z - mean_logit, ImageGrid(n.width(), n.height())};
  const double inv_b = 1.0 / static_cast<double>(blocks);
  for (std::size_t k = 0; k < blocks; ++k) {
    const double psi = std::exp(sd_b[k] / temperature - log_z);
    const double d_sd = (psi - inv_b) / temperature;
    const double scale = d_sd * inv_area / sd_b[k];
    const std::size_t r0 = (k / bx) * block_size;
    const std::size_t c0 = (k % bx) * block_size;
    for (std::size_t r = r0; r < r0 + block_size; ++r)
      for (std::size_t c = c0; c < c0 + block_size; ++c) out.grad(r, c) = scale * (n(r, c) - mean_b[k]);
  }
  return out;
}

/// Gradient matching against the piecewise-constant target:
/// (1/M) sum (Dx s - Dx m)^2 + (Dy s - Dy m)^2.
inline TermGradient pc_loss(const ImageGrid& s, const ImageGrid& m_target) {
  s.require_same_shape(m_target);
  const double inv_m = 1.0 / static_cast<double>(s.size());
  const ImageGrid rx = forward_diff_x(s) - forward_diff_x(m_target);
  const ImageGrid ry = forward_diff_y(s) - forward_diff_y(m_target);
  TermGradient out{(dot(rx, rx) + dot(ry, ry)) * inv_m, ImageGrid()};
  out.grad = forward_diff_x_adjoint(rx) + forward_diff_y_adjoint(ry);
  out.grad *= 2.0 * inv_m;
  return out;
}

/// Anisotropic total variation with Charbonnier smoothing
/// phi(g) = sqrt(g^2 + eps^2) - eps.
inline TermGradient tv_loss(const ImageGrid& s, double tv_epsilon) {
  if (!(tv_epsilon > 0.0)) fail(ErrorCode::kInvalidArgument, "tv_epsilon must be positive");
  const double inv_m = 1.0 / static_cast<double>(s.size());
  const double eps2 = tv_epsilon * tv_epsilon;
  ImageGrid gx = forward_diff_x(s);
  ImageGrid gy = forward_diff_y(s);
  double value = 0.0;
  for (ImageGrid* g : {&gx, &gy}) {
    for (double& v : g->pixels()) {
      const double root = std::sqrt(v * v + eps2);
      value += root - tv_epsilon;
      v /= root;  // phi'(v)
    }
  }
  TermGradient out{value * inv_m, forward_diff_x_adjoint(gx) + forward_diff_y_adjoint(gy)};
  out.grad *= inv_m;
  return out;
}

/// Draws the lags and block size for one update. Lags are uniform over
/// [-L, L]^2 minus the origin, with L clipped to the grid; block sizes are
/// restricted to those leaving at least two complete blocks.
inline StochasticDraw draw_stochastic(CounterRng& rng, const LossConfig& config,
                                      std::size_t width, std::size_t height) {
  StochasticDraw draw;
  const int max_row = std::min<int>(config.ac_max_lag, static_cast<int>(height) - 1);
  const int max_col = std::min<int>(config.ac_max_lag, static_cast<int>(width) - 1);
  if (max_row > 0 || max_col > 0) {
    for (int k = 0; k < config.ac_lags_per_step; ++k) {
      Lag lag;
      do {
        lag.row = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * max_row + 1))) - max_row;
        lag.col = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * max_col + 1))) - max_col;
      } while (lag.row == 0 && lag.col == 0);
      draw.lags.push_back(lag);
    }
  }
  std::vector<std::size_t> feasible;
  for (std::size_t b : config.st_block_sizes) {
    if (b >= 2 && block_count(width, height, b) >= 2) feasible.push_back(b);
  }
  if (!feasible.empty()) draw.block_size = feasible[rng.below(feasible.size())];
  return draw;
}

/// Weighted sum of the enabled terms. Terms with zero weight are not evaluated.
inline LossBreakdown total_loss(const ImageGrid& x, const DecompositionState& state,
                                const ImageGrid& m_target, const LossConfig& config,
                                const StochasticDraw& draw) {
  config.validate();
  x.require_same_shape(state.signal);
  x.require_same_shape(state.noise);
  x.require_same_shape(m_target);

  LossBreakdown out{0.0, {}, ImageGrid(x.width(), x.height()), ImageGrid(x.width(), x.height())};
  auto accumulate = [](ImageGrid& dst, const ImageGrid& src, double w) {
    auto d = dst.pixels();
    auto s = src.pixels();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += w * s[i];
  };

  if (config.weight_rec > 0.0) {
    const auto t = rec_loss(x, state);
    out.per_term.rec = t.value;
    out.total += config.weight_rec * t.value;
    accumulate(out.grad_signal, t.grad_signal, config.weight_rec);
    accumulate(out.grad_noise, t.grad_noise, config.weight_rec);
  }
  if (config.weight_ac > 0.0) {
    const auto t = ac_loss(state.noise, draw.lags);
    out.per_term.ac = t.value;
    out.total += config.weight_ac * t.value;
    accumulate(out.grad_noise, t.grad, config.weight_ac);
  }
  if (config.weight_st > 0.0) {
    const auto t = st_loss(state.noise, draw.block_size, config.st_epsilon, config.st_temperature);
    out.per_term.st = t.value;
    out.total += config.weight_st * t.value;
    accumulate(out.grad_noise, t.grad, config.weight_st);
  }
  if (config.weight_pc > 0.0) {
    const auto t = pc_loss(state.signal, m_target);
    out.per_term.pc = t.value;
    out.total += config.weight_pc * t.value;
    accumulate(out.grad_signal, t.grad, config.weight_pc);
  }
  if (config.weight_tv > 0.0) {
    const auto t = tv_loss(state.signal, config.tv_epsilon);
    out.per_term.tv = t.value;
    out.total += config.weight_tv * t.value;
    accumulate(out.grad_signal, t.grad, config.weight_tv);
  }
  return out;
}

}  // namespace whiteprior
