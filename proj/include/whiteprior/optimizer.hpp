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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "whiteprior/error.hpp"
#include "whiteprior/image_grid.hpp"
#include "whiteprior/losses.hpp"
#include "whiteprior/random.hpp"

namespace whiteprior {

enum class InitStrategy { kObservationSignal, kSmoothedSplit };

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t iterations = 3000;
  std::size_t lr_halving_period = 600;
  std::uint64_t seed = 0;
  InitStrategy init_strategy = InitStrategy::kSmoothedSplit;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail(ErrorCode::kConfig, "learning_rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) fail(ErrorCode::kConfig, "betas must lie in (0,1)");
    if (!(adam_epsilon > 0.0)) fail(ErrorCode::kConfig, "adam_epsilon must be positive");
    if (iterations == 0) fail(ErrorCode::kConfig, "iterations must be >= 1");
    if (lr_halving_period == 0) fail(ErrorCode::kConfig, "lr_halving_period must be >= 1");
  }
};

/// Step size after `iteration` completed steps: halved once per period.
inline double scheduled_learning_rate(const OptimizerConfig& config, std::size_t iteration) {
  return std::ldexp(config.learning_rate, -static_cast<int>(iteration / config.lr_halving_period));
}

struct AdamMoments {
  ImageGrid first_signal, second_signal;
  ImageGrid first_noise, second_noise;
  std::uint64_t step = 0;

  static AdamMoments zeros_like(const ImageGrid& g) {
    const ImageGrid z(g.width(), g.height());
    return {z, z, z, z, 0};
  }
};

struct TraceRecord {
  std::size_t iteration = 0;
  double learning_rate = 0.0;
  double total = 0.0;
  TermValues terms;
  StochasticDraw draw;
};

struct OptimizationTrace {
  std::vector<TraceRecord> records;
};

struct DenoiseResult {
  DecompositionState state;
  OptimizationTrace trace;
};

/// Raised when the loss or its gradient stops being finite. Carries the
/// trace up to the failing iteration.
class DenoiseAborted : public Error {
 public:
  DenoiseAborted(const std::string& what, OptimizationTrace trace)
      : Error(ErrorCode::kNonFinite, what), trace_(std::move(trace)) {}
  const OptimizationTrace& trace() const noexcept { return trace_; }

 private:
  OptimizationTrace trace_;
};

inline DecompositionState init_state(const ImageGrid& x, InitStrategy strategy) {
  switch (strategy) {
    case InitStrategy::kObservationSignal:
      return {x, ImageGrid(x.width(), x.height())};
    case InitStrategy::kSmoothedSplit: {
      ImageGrid s = box_blur3(x);
      ImageGrid n = x - s;
      return {std::move(s), std::move(n)};
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown init strategy");
}

namespace detail {

inline void adam_update(ImageGrid& var, const ImageGrid& grad, ImageGrid& first, ImageGrid& second,
                        const OptimizerConfig& config, double step_size, double bias1,
                        double bias2) {
  auto x = var.pixels();
  auto g = grad.pixels();
  auto m = first.pixels();
  auto v = second.pixels();
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    x[i] -= step_size * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
  }
}

}  // namespace detail

/// One bias-corrected Adam update of S and N. State and moments are updated
/// in place.
inline void adam_step(DecompositionState& state, const ImageGrid& grad_signal,
                      const ImageGrid& grad_noise, AdamMoments& moments,
                      const OptimizerConfig& config, double lr_now) {
  state.signal.require_same_shape(grad_signal);
  state.noise.require_same_shape(grad_noise);
  state.signal.require_same_shape(moments.first_signal);
  if (!(lr_now > 0.0)) fail(ErrorCode::kInvalidArgument, "learning rate must be positive");
  if (!all_finite(grad_signal)) fail(ErrorCode::kNonFinite, "signal gradient");
  if (!all_finite(grad_noise)) fail(ErrorCode::kNonFinite, "noise gradient");

  ++moments.step;
  const double t = static_cast<double>(moments.step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  detail::adam_update(state.signal, grad_signal, moments.first_signal, moments.second_signal,
                      config, lr_now, bias1, bias2);
  detail::adam_update(state.noise, grad_noise, moments.first_noise, moments.second_noise, config,
                      lr_now, bias1, bias2);
}

namespace detail {

// Names the first term whose value or gradient is non-finite.
inline std::string locate_nonfinite_term(const ImageGrid& x, const DecompositionState& state,
                                         const ImageGrid& m_target, const LossConfig& config,
                                         const StochasticDraw& draw) {
  auto bad = [](double v, const ImageGrid& g) { return !std::isfinite(v) || !all_finite(g); };
  if (config.weight_rec > 0.0) {
    const auto t = rec_loss(x, state);
    if (bad(t.value, t.grad_signal)) return "rec";
  }
  if (config.weight_ac > 0.0) {
    const auto t = ac_loss(state.noise, draw.lags);
    if (bad(t.value, t.grad)) return "ac";
  }
  if (config.weight_st > 0.0) {
    const auto t = st_loss(state.noise, draw.block_size, config.st_epsilon, config.st_temperature);
    if (bad(t.value, t.grad)) return "st";
  }
  if (config.weight_pc > 0.0) {
    const auto t = pc_loss(state.signal, m_target);
    if (bad(t.value, t.grad)) return "pc";
  }
  if (config.weight_tv > 0.0) {
    const auto t = tv_loss(state.signal, config.tv_epsilon);
    if (bad(t.value, t.grad)) return "tv";
  }
  return "unknown";
}

}  // namespace detail

/// Jointly optimizes (S, N) for one observation. Deterministic in
/// (x, configs, m_target).
inline DenoiseResult denoise(const ImageGrid& x, const LossConfig& loss_config,
                             const OptimizerConfig& opt_config, const ImageGrid& m_target) {
  loss_config.validate();
  opt_config.validate();
  x.require_same_shape(m_target);
  if (loss_config.weight_st > 0.0) {
    bool feasible = false;
    for (std::size_t b : loss_config.st_block_sizes) {
      feasible = feasible || block_count(x.width(), x.height(), b) >= 2;
    }
    if (!feasible) fail(ErrorCode::kConfig, "no block size leaves two complete blocks");
  }
  if (loss_config.weight_ac > 0.0 && x.size() < 2) {
    fail(ErrorCode::kConfig, "autocorrelation needs at least two pixels");
  }

  DenoiseResult result{init_state(x, opt_config.init_strategy), {}};
  result.trace.records.reserve(opt_config.iterations);
  AdamMoments moments = AdamMoments::zeros_like(x);
  CounterRng rng(opt_config.seed, StreamTag::kStochasticDraw);

  for (std::size_t it = 0; it < opt_config.iterations; ++it) {
    const double lr = scheduled_learning_rate(opt_config, it);
    StochasticDraw draw = draw_stochastic(rng, loss_config, x.width(), x.height());
    LossBreakdown loss = total_loss(x, result.state, m_target, loss_config, draw);
    if (!std::isfinite(loss.total) || !all_finite(loss.grad_signal) || !all_finite(loss.grad_noise)) {
      const std::string term = detail::locate_nonfinite_term(x, result.state, m_target, loss_config, draw);
      throw DenoiseAborted("iteration " + std::to_string(it) + ", term " + term,
                           std::move(result.trace));
    }
    result.trace.records.push_back({it, lr, loss.total, loss.per_term, std::move(draw)});
    adam_step(result.state, loss.grad_signal, loss.grad_noise, moments, opt_config, lr);
  }
  return result;
}

namespace detail {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

}  // namespace detail

/// CSV with columns iter,lr,total,rec,ac,st,pc,tv; disabled terms are empty.
inline void write_trace_csv(const OptimizationTrace& trace, std::ostream& out) {
  out << "iter,lr,total,rec,ac,st,pc,tv\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << detail::format_number(r.learning_rate) << ','
        << detail::format_number(r.total) << ',' << detail::format_optional(r.terms.rec) << ','
        << detail::format_optional(r.terms.ac) << ',' << detail::format_optional(r.terms.st)
        << ',' << detail::format_optional(r.terms.pc) << ','
        << detail::format_optional(r.terms.tv) << '\n';
  }
}

inline void write_trace_csv(const OptimizationTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kUnwritablePath, path.string());
  write_trace_csv(trace, out);
}

}  // namespace whiteprior
