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

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "whiteprior/baselines.hpp"
#include "whiteprior/error.hpp"
#include "whiteprior/losses.hpp"
#include "whiteprior/noise.hpp"
#include "whiteprior/optimizer.hpp"
#include "whiteprior/segmentation.hpp"

namespace whiteprior {

using json = nlohmann::json;

// Missing keys keep their defaults; unknown keys are rejected so typos in
// reviewable config files do not silently fall back to defaults.

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) fail(ErrorCode::kConfig, std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) fail(ErrorCode::kConfig, std::string("unknown key '") + key + "' in " + what);
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(ErrorCode::kConfig, std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

}  // namespace detail

inline LossConfig loss_config_from_json(const json& j) {
  detail::reject_unknown(j, {"weight_rec", "weight_ac", "weight_st", "weight_pc", "weight_tv", "ac_max_lag",
                             "ac_lags_per_step", "st_block_sizes", "tv_epsilon", "st_epsilon",
                             "st_temperature"},
                         "loss");
  LossConfig c;
  detail::read_if(j, "weight_rec", c.weight_rec);
  detail::read_if(j, "weight_ac", c.weight_ac);
  detail::read_if(j, "weight_st", c.weight_st);
  detail::read_if(j, "weight_pc", c.weight_pc);
  detail::read_if(j, "weight_tv", c.weight_tv);
  detail::read_if(j, "ac_max_lag", c.ac_max_lag);
  detail::read_if(j, "ac_lags_per_step", c.ac_lags_per_step);
  detail::read_if(j, "st_block_sizes", c.st_block_sizes);
  detail::read_if(j, "tv_epsilon", c.tv_epsilon);
  detail::read_if(j, "st_epsilon", c.st_epsilon);
  detail::read_if(j, "st_temperature", c.st_temperature);
  c.validate();
  return c;
}

inline json to_json(const LossConfig& c) {
  return {{"weight_rec", c.weight_rec}, {"weight_ac", c.weight_ac}, {"weight_st", c.weight_st},
          {"weight_pc", c.weight_pc},   {"weight_tv", c.weight_tv}, {"ac_max_lag", c.ac_max_lag},
          {"ac_lags_per_step", c.ac_lags_per_step}, {"st_block_sizes", c.st_block_sizes},
          {"tv_epsilon", c.tv_epsilon}, {"st_epsilon", c.st_epsilon}, {"st_temperature", c.st_temperature}};
}

inline OptimizerConfig optimizer_config_from_json(const json& j) {
  detail::reject_unknown(j, {"learning_rate", "beta1", "beta2", "adam_epsilon", "iterations",
                             "lr_halving_period", "seed", "init_strategy"},
                         "optimizer");
  OptimizerConfig c;
  detail::read_if(j, "learning_rate", c.learning_rate);
  detail::read_if(j, "beta1", c.beta1);
  detail::read_if(j, "beta2", c.beta2);
  detail::read_if(j, "adam_epsilon", c.adam_epsilon);
  detail::read_if(j, "iterations", c.iterations);
  detail::read_if(j, "lr_halving_period", c.lr_halving_period);
  detail::read_if(j, "seed", c.seed);
  if (j.contains("init_strategy")) {
    std::string s;
    detail::read_if(j, "init_strategy", s);
    if (s == "observation-signal") {
      c.init_strategy = InitStrategy::kObservationSignal;
    } else if (s == "smoothed-split") {
      c.init_strategy = InitStrategy::kSmoothedSplit;
    } else {
      fail(ErrorCode::kConfig, "init_strategy must be observation-signal or smoothed-split");
    }
  }
  c.validate();
  return c;
}

inline json to_json(const OptimizerConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"iterations", c.iterations},
          {"lr_halving_period", c.lr_halving_period},
          {"seed", c.seed},
          {"init_strategy", c.init_strategy == InitStrategy::kSmoothedSplit ? "smoothed-split"
                                                                             : "observation-signal"}};
}

inline SegmentationParams segmentation_params_from_json(const json& j) {
  detail::reject_unknown(j, {"k_threshold", "min_size", "presmooth_sigma"}, "segmentation");
  SegmentationParams p;
  detail::read_if(j, "k_threshold", p.k_threshold);
  detail::read_if(j, "min_size", p.min_size);
  detail::read_if(j, "presmooth_sigma", p.presmooth_sigma);
  if (!(p.k_threshold > 0.0) || !(p.presmooth_sigma >= 0.0)) {
    fail(ErrorCode::kConfig, "segmentation parameters out of range");
  }
  return p;
}

inline json to_json(const SegmentationParams& p) {
  return {{"k_threshold", p.k_threshold}, {"min_size", p.min_size}, {"presmooth_sigma", p.presmooth_sigma}};
}

inline PhantomSpec phantom_spec_from_json(const json& j) {
  detail::reject_unknown(j, {"width", "height", "region_count", "intensity_levels", "seed"}, "phantom");
  PhantomSpec s;
  detail::read_if(j, "width", s.width);
  detail::read_if(j, "height", s.height);
  detail::read_if(j, "region_count", s.region_count);
  detail::read_if(j, "intensity_levels", s.intensity_levels);
  detail::read_if(j, "seed", s.seed);
  return s;
}

inline json to_json(const PhantomSpec& s) {
  return {{"width", s.width}, {"height", s.height}, {"region_count", s.region_count},
          {"intensity_levels", s.intensity_levels}, {"seed", s.seed}};
}

/// Settings for one run of the decomposition denoiser.
struct DenoiserSettings {
  LossConfig loss;
  OptimizerConfig optimizer;
  SegmentationParams segmentation;
};

inline DenoiserSettings denoiser_settings_from_json(const json& j) {
  detail::reject_unknown(j, {"loss", "optimizer", "segmentation"}, "denoiser settings");
  DenoiserSettings s;
  if (j.contains("loss")) s.loss = loss_config_from_json(j.at("loss"));
  if (j.contains("optimizer")) s.optimizer = optimizer_config_from_json(j.at("optimizer"));
  if (j.contains("segmentation")) s.segmentation = segmentation_params_from_json(j.at("segmentation"));
  return s;
}

inline json to_json(const DenoiserSettings& s) {
  return {{"loss", to_json(s.loss)}, {"optimizer", to_json(s.optimizer)},
          {"segmentation", to_json(s.segmentation)}};
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kFileNotFound, path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
}

}  // namespace whiteprior
