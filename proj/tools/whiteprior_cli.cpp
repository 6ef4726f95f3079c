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

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "whiteprior/baselines.hpp"
#include "whiteprior/config.hpp"
#include "whiteprior/harness.hpp"
#include "whiteprior/metrics.hpp"
#include "whiteprior/noise.hpp"
#include "whiteprior/optimizer.hpp"
#include "whiteprior/pgm.hpp"
#include "whiteprior/segmentation.hpp"

namespace wp = whiteprior;

namespace {

// Noise levels on the command line use the 8-bit convention (e.g. 25).
constexpr double kEightBit = 255.0;

int run_synthesize(const std::string& in, double sigma, std::uint64_t seed, const std::string& out) {
  const wp::ImageGrid clean = wp::load_pgm(in);
  const wp::ImageGrid noisy = wp::add_awgn(clean, {sigma / kEightBit, seed});
  // PGM cannot hold values outside [0,1].
  wp::save_pgm(wp::clamp01(noisy), out);
  return 0;
}

int run_denoise(const std::string& in, const std::string& config_path, const std::string& out_signal,
                const std::string& out_noise, const std::string& trace_path) {
  const wp::ImageGrid x = wp::load_pgm(in);
  wp::DenoiserSettings settings;
  if (!config_path.empty()) settings = wp::denoiser_settings_from_json(wp::read_json_file(config_path));
  const wp::ImageGrid target = wp::piecewise_target(x, wp::felzenszwalb_segment(x, settings.segmentation));
  const wp::DenoiseResult result = wp::denoise(x, settings.loss, settings.optimizer, target);
  wp::save_pgm(wp::clamp01(result.state.signal), out_signal);
  wp::save_pgm(wp::contrast_stretch(result.state.noise), out_noise);
  if (!trace_path.empty()) wp::write_trace_csv(result.trace, std::filesystem::path(trace_path));
  return 0;
}

int run_estimate(const std::string& in) {
  std::printf("%.6f\n", kEightBit * wp::estimate_sigma(wp::load_pgm(in)));
  return 0;
}

int run_segment(const std::string& in, const wp::SegmentationParams& params, const std::string& out) {
  const wp::ImageGrid x = wp::load_pgm(in);
  const wp::SegmentationLabels labels = wp::felzenszwalb_segment(x, params);
  wp::save_pgm(wp::clamp01(wp::piecewise_target(x, labels)), out);
  std::fprintf(stderr, "clusters: %zu\n", labels.cluster_count);
  return 0;
}

int run_metrics(const std::string& a, const std::string& b) {
  const wp::ImageGrid ga = wp::load_pgm(a);
  const wp::ImageGrid gb = wp::load_pgm(b);
  std::printf("psnr %.6f\nssim %.6f\n", wp::psnr(ga, gb, 1.0), wp::ssim(ga, gb));
  return 0;
}

int run_nlm(const std::string& in, std::optional<double> sigma, const std::string& out) {
  const wp::ImageGrid x = wp::load_pgm(in);
  wp::NlmParams params;
  if (sigma) params.sigma = *sigma / kEightBit;
  wp::save_pgm(wp::clamp01(wp::nlm_denoise(x, params)), out);
  return 0;
}

int run_phantom(const std::string& spec_path, const std::string& out) {
  wp::save_pgm(wp::generate_phantom(wp::phantom_spec_from_json(wp::read_json_file(spec_path))), out);
  return 0;
}

int run_benchmark(const std::string& config_path, const std::string& out_dir) {
  wp::ExperimentConfig cfg = wp::experiment_config_from_json(wp::read_json_file(config_path));
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const wp::BenchmarkReport report = wp::run_benchmark(cfg);
  wp::write_report(report, cfg.output_dir);
  std::size_t failed = 0;
  for (const auto& r : report.rows) failed += r.ok ? 0 : 1;
  std::fprintf(stderr, "%zu rows, %zu failed, report in %s\n", report.rows.size(), failed,
               cfg.output_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind single-image denoising by signal/noise decomposition"};
  app.require_subcommand(1);

  std::string in, out, config, out_signal, out_noise, trace, a, b, spec;
  double sigma = 25.0;
  std::uint64_t seed = 0;
  std::optional<double> nlm_sigma;
  wp::SegmentationParams seg;

  auto* synth = app.add_subcommand("synthesize", "Add white Gaussian noise to a clean image");
  synth->add_option("--in", in, "Clean PGM")->required()->check(CLI::ExistingFile);
  synth->add_option("--sigma", sigma, "Noise std on the 8-bit scale")->required()->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "Noise seed")->required();
  synth->add_option("--out", out, "Output PGM")->required();

  auto* den = app.add_subcommand("denoise", "Split a noisy image into signal and noise");
  den->add_option("--in", in, "Noisy PGM")->required()->check(CLI::ExistingFile);
  den->add_option("--config", config, "JSON with optional loss/optimizer/segmentation sections")
      ->check(CLI::ExistingFile);
  den->add_option("--out-signal", out_signal, "Signal estimate PGM")->required();
  den->add_option("--out-noise", out_noise, "Contrast-stretched noise estimate PGM")->required();
  den->add_option("--trace", trace, "Per-iteration loss CSV");

  auto* est = app.add_subcommand("estimate-noise", "Print the blind noise level on the 8-bit scale");
  est->add_option("--in", in, "Noisy PGM")->required()->check(CLI::ExistingFile);

  auto* segment = app.add_subcommand("segment", "Write the piecewise-constant target image");
  segment->add_option("--in", in, "Input PGM")->required()->check(CLI::ExistingFile);
  segment->add_option("--k", seg.k_threshold, "Merge threshold scale")->check(CLI::PositiveNumber);
  segment->add_option("--min-size", seg.min_size, "Minimum cluster size in pixels");
  segment->add_option("--presmooth", seg.presmooth_sigma, "Gaussian presmoothing std")->check(CLI::NonNegativeNumber);
  segment->add_option("--out", out, "Output PGM")->required();

  auto* met = app.add_subcommand("metrics", "Print PSNR and SSIM between two images");
  met->add_option("--a", a, "First PGM")->required()->check(CLI::ExistingFile);
  met->add_option("--b", b, "Second PGM")->required()->check(CLI::ExistingFile);

  auto* nlm = app.add_subcommand("nlm", "Non-local means baseline");
  nlm->add_option("--in", in, "Noisy PGM")->required()->check(CLI::ExistingFile);
  nlm->add_option("--sigma", nlm_sigma, "Noise std on the 8-bit scale (estimated when omitted)")
      ->check(CLI::NonNegativeNumber);
  nlm->add_option("--out", out, "Output PGM")->required();

  auto* ph = app.add_subcommand("phantom", "Generate a piecewise-constant Voronoi phantom");
  ph->add_option("--spec", spec, "Phantom JSON")->required()->check(CLI::ExistingFile);
  ph->add_option("--out", out, "Output PGM")->required();

  auto* bench = app.add_subcommand("benchmark", "Run an experiment grid and write report.csv/report.json");
  bench->add_option("--config", config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", out, "Report directory (overrides output_dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synthesize(in, sigma, seed, out);
    if (*den) return run_denoise(in, config, out_signal, out_noise, trace);
    if (*est) return run_estimate(in);
    if (*segment) return run_segment(in, seg, out);
    if (*met) return run_metrics(a, b);
    if (*nlm) return run_nlm(in, nlm_sigma, out);
    if (*ph) return run_phantom(spec, out);
    if (*bench) return run_benchmark(config, out);
  } catch (const wp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
