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
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "whiteprior/baselines.hpp"
#include "whiteprior/config.hpp"
#include "whiteprior/error.hpp"
#include "whiteprior/metrics.hpp"
#include "whiteprior/noise.hpp"
#include "whiteprior/optimizer.hpp"
#include "whiteprior/pgm.hpp"
#include "whiteprior/segmentation.hpp"

namespace whiteprior {

/// Loss configurations of the ablation table, in row order.
struct AblationEntry {
  std::string name;
  LossConfig config;
};

inline std::vector<AblationEntry> ablation_grid(const LossConfig& base) {
  auto with = [&](bool tv, bool ac, bool st) {
    LossConfig c = base;
    if (!tv) c.weight_tv = 0.0;
    if (!ac) c.weight_ac = 0.0;
    if (!st) c.weight_st = 0.0;
    return c;
  };
  return {{"rec+pc", with(false, false, false)},
          {"rec+pc+tv", with(true, false, false)},
          {"rec+pc+tv+ac", with(true, true, false)},
          {"rec+pc+tv+st", with(true, false, true)},
          {"all", base}};
}

struct WhitepriorMethod {
  DenoiserSettings settings;
};

struct NlmMethod {
  int patch_radius = 3;
  int search_radius = 10;
};

struct MethodSpec {
  std::string name;
  std::variant<WhitepriorMethod, NlmMethod> method;
};

struct DirectoryCorpus {
  std::filesystem::path directory;
};

/// `count` phantoms; phantom i uses seed `spec.seed + i`.
struct PhantomCorpus {
  std::size_t count = 10;
  PhantomSpec spec;
};

struct ExperimentConfig {
  std::variant<DirectoryCorpus, PhantomCorpus> corpus;
  std::vector<double> sigmas;  // 8-bit scale, e.g. 25
  std::vector<MethodSpec> methods;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "report";
  unsigned threads = 1;

  void validate() const {
    if (sigmas.empty() || methods.empty() || seeds.empty()) {
      fail(ErrorCode::kConfig, "sigmas, methods and seeds must be non-empty");
    }
    for (double s : sigmas) {
      if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorCode::kConfig, "sigmas must be positive");
    }
    std::vector<std::string> names;
    for (const auto& m : methods) names.push_back(m.name);
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
      fail(ErrorCode::kConfig, "method names must be unique");
    }
    if (const auto* p = std::get_if<PhantomCorpus>(&corpus); p && p->count == 0) {
      fail(ErrorCode::kConfig, "phantom corpus is empty");
    }
  }
};

/// Parses an experiment document. A method of type "whiteprior-ablation"
/// expands into the five ablation rows, named "<name>/<row>".
inline ExperimentConfig experiment_config_from_json(const json& j) {
  detail::reject_unknown(j, {"corpus", "sigmas", "methods", "seeds", "output_dir", "threads"}, "experiment");
  ExperimentConfig cfg;
  if (!j.contains("corpus")) fail(ErrorCode::kConfig, "experiment needs a corpus");
  const json& corpus = j.at("corpus");
  detail::reject_unknown(corpus, {"directory", "phantoms"}, "corpus");
  if (corpus.contains("directory") == corpus.contains("phantoms")) {
    fail(ErrorCode::kConfig, "corpus needs exactly one of 'directory' or 'phantoms'");
  }
  if (corpus.contains("directory")) {
    cfg.corpus = DirectoryCorpus{corpus.at("directory").get<std::string>()};
  } else {
    const json& p = corpus.at("phantoms");
    detail::reject_unknown(p, {"count", "spec"}, "phantoms");
    PhantomCorpus pc;
    detail::read_if(p, "count", pc.count);
    if (p.contains("spec")) pc.spec = phantom_spec_from_json(p.at("spec"));
    cfg.corpus = pc;
  }
  detail::read_if(j, "sigmas", cfg.sigmas);
  detail::read_if(j, "seeds", cfg.seeds);
  detail::read_if(j, "threads", cfg.threads);
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

  if (!j.contains("methods") || !j.at("methods").is_array()) fail(ErrorCode::kConfig, "methods must be an array");
  for (const json& m : j.at("methods")) {
    std::string type = "whiteprior";
    std::string name;
    detail::read_if(m, "type", type);
    detail::read_if(m, "name", name);
    if (name.empty()) name = type;
    if (type == "nlm") {
      detail::reject_unknown(m, {"type", "name", "patch_radius", "search_radius"}, "nlm method");
      NlmMethod nlm;
      detail::read_if(m, "patch_radius", nlm.patch_radius);
      detail::read_if(m, "search_radius", nlm.search_radius);
      cfg.methods.push_back({name, nlm});
    } else if (type == "whiteprior" || type == "whiteprior-ablation") {
      detail::reject_unknown(m, {"type", "name", "loss", "optimizer", "segmentation"}, "whiteprior method");
      json settings = json::object();
      for (const char* key : {"loss", "optimizer", "segmentation"}) {
        if (m.contains(key)) settings[key] = m.at(key);
      }
      const DenoiserSettings base = denoiser_settings_from_json(settings);
      if (type == "whiteprior") {
        cfg.methods.push_back({name, WhitepriorMethod{base}});
      } else {
        for (const auto& row : ablation_grid(base.loss)) {
          DenoiserSettings s = base;
          s.loss = row.config;
          cfg.methods.push_back({name + "/" + row.name, WhitepriorMethod{s}});
        }
      }
    } else {
      fail(ErrorCode::kConfig, "unknown method type '" + type + "'");
    }
  }
  cfg.validate();
  return cfg;
}

struct BenchmarkRow {
  std::string image;
  double sigma = 0.0;  // 8-bit scale
  std::string method;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double psnr = 0.0;
  double ssim = 0.0;
  double sigma_hat = 0.0;  // 8-bit scale
  TermValues final_terms;
  double runtime_seconds = 0.0;
};

struct AggregateRow {
  double sigma = 0.0;
  std::string method;
  std::size_t count = 0;
  double psnr_mean = 0.0, psnr_std = 0.0;
  double ssim_mean = 0.0, ssim_std = 0.0;
};

struct TTestRow {
  double sigma = 0.0;
  std::string method_a, method_b;
  std::size_t pairs = 0;
  std::optional<TTestResult> result;  // empty when degenerate or too few pairs
  std::string note;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<TTestRow> ttests;
};

namespace detail {

struct CorpusImage {
  std::string id;
  std::variant<std::filesystem::path, PhantomSpec> source;

  ImageGrid load() const {
    if (const auto* p = std::get_if<std::filesystem::path>(&source)) return load_pgm(*p);
    return generate_phantom(std::get<PhantomSpec>(source));
  }
};

inline std::vector<CorpusImage> enumerate_corpus(const ExperimentConfig& cfg) {
  std::vector<CorpusImage> images;
  if (const auto* dir = std::get_if<DirectoryCorpus>(&cfg.corpus)) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir->directory, ec)) {
      fail(ErrorCode::kFileNotFound, "corpus directory " + dir->directory.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir->directory)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
        images.push_back({entry.path().filename().string(), entry.path()});
      }
    }
  } else {
    const auto& pc = std::get<PhantomCorpus>(cfg.corpus);
    for (std::size_t i = 0; i < pc.count; ++i) {
      PhantomSpec spec = pc.spec;
      spec.seed = pc.spec.seed + i;
      char id[32];
      std::snprintf(id, sizeof id, "phantom_%04zu", i);
      images.push_back({id, spec});
    }
  }
  std::sort(images.begin(), images.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (images.empty()) fail(ErrorCode::kConfig, "corpus is empty");
  return images;
}

/// Seed of the noise realization for one (image, seed) pair. Independent of
/// sigma and method so every method sees the same noisy input.
inline std::uint64_t noise_seed(const std::string& image_id, std::uint64_t seed) {
  std::uint64_t h = 0xCBF2'9CE4'8422'2325ULL;  // FNV-1a
  for (unsigned char ch : image_id) h = (h ^ ch) * 0x0000'0100'0000'01B3ULL;
  return splitmix64(h ^ splitmix64(seed ^ static_cast<std::uint64_t>(StreamTag::kBenchmark)));
}

struct Cell {
  std::size_t image;
  std::size_t sigma;
  std::size_t method;
  std::size_t seed;
};

inline BenchmarkRow run_cell(const CorpusImage& image, double sigma8,
                             const MethodSpec& method, std::uint64_t seed) {
  BenchmarkRow row;
  row.image = image.id;
  row.sigma = sigma8;
  row.method = method.name;
  row.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const ImageGrid clean = image.load();
    const double sigma = sigma8 / 255.0;
    const ImageGrid noisy = add_awgn(clean, {sigma, noise_seed(image.id, seed)});
    row.sigma_hat = 255.0 * estimate_sigma(noisy);
    ImageGrid estimate;
    if (const auto* wp = std::get_if<WhitepriorMethod>(&method.method)) {
      const ImageGrid target = piecewise_target(noisy, felzenszwalb_segment(noisy, wp->settings.segmentation));
      OptimizerConfig opt = wp->settings.optimizer;
      opt.seed = seed;
      const DenoiseResult result = denoise(noisy, wp->settings.loss, opt, target);
      estimate = clamp01(result.state.signal);
      row.final_terms = result.trace.records.back().terms;
    } else {
      const auto& nlm = std::get<NlmMethod>(method.method);
      NlmParams params;
      params.patch_radius = nlm.patch_radius;
      params.search_radius = nlm.search_radius;
      params.sigma = row.sigma_hat / 255.0;
      estimate = nlm_denoise(noisy, params);
    }
    row.psnr = psnr(estimate, clean, 1.0);
    row.ssim = ssim(estimate, clean);
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

inline double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Runs every (image, sigma, method, seed) cell and assembles the report.
/// Rows come out in lexicographic (image, sigma, method, seed) order no
/// matter how many worker threads run the cells.
inline BenchmarkReport run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto images = detail::enumerate_corpus(cfg);

  std::vector<std::size_t> sigma_order(cfg.sigmas.size()), method_order(cfg.methods.size()),
      seed_order(cfg.seeds.size());
  for (std::size_t i = 0; i < sigma_order.size(); ++i) sigma_order[i] = i;
  for (std::size_t i = 0; i < method_order.size(); ++i) method_order[i] = i;
  for (std::size_t i = 0; i < seed_order.size(); ++i) seed_order[i] = i;
  std::stable_sort(sigma_order.begin(), sigma_order.end(),
                   [&](auto a, auto b) { return cfg.sigmas[a] < cfg.sigmas[b]; });
  std::stable_sort(method_order.begin(), method_order.end(),
                   [&](auto a, auto b) { return cfg.methods[a].name < cfg.methods[b].name; });
  std::stable_sort(seed_order.begin(), seed_order.end(),
                   [&](auto a, auto b) { return cfg.seeds[a] < cfg.seeds[b]; });

  std::vector<detail::Cell> cells;
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t s : sigma_order)
      for (std::size_t m : method_order)
        for (std::size_t k : seed_order) cells.push_back({i, s, m, k});

  BenchmarkReport report;
  report.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      const auto& cell = cells[c];
      report.rows[c] = detail::run_cell(images[cell.image], cfg.sigmas[cell.sigma],
                                        cfg.methods[cell.method], cfg.seeds[cell.seed]);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cells.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t s : sigma_order) {
    const double sigma = cfg.sigmas[s];
    for (std::size_t m : method_order) {
      AggregateRow agg;
      agg.sigma = sigma;
      agg.method = cfg.methods[m].name;
      std::vector<double> ps, ss;
      for (const auto& row : report.rows) {
        if (row.ok && row.sigma == sigma && row.method == agg.method) {
          ps.push_back(row.psnr);
          ss.push_back(row.ssim);
        }
      }
      agg.count = ps.size();
      if (!ps.empty()) {
        for (double v : ps) agg.psnr_mean += v;
        for (double v : ss) agg.ssim_mean += v;
        agg.psnr_mean /= static_cast<double>(ps.size());
        agg.ssim_mean /= static_cast<double>(ss.size());
        agg.psnr_std = detail::sample_std(ps, agg.psnr_mean);
        agg.ssim_std = detail::sample_std(ss, agg.ssim_mean);
      }
      report.aggregates.push_back(agg);
    }

    for (std::size_t a = 0; a < method_order.size(); ++a) {
      for (std::size_t b = a + 1; b < method_order.size(); ++b) {
        TTestRow tt;
        tt.sigma = sigma;
        tt.method_a = cfg.methods[method_order[a]].name;
        tt.method_b = cfg.methods[method_order[b]].name;
        std::map<std::pair<std::string, std::uint64_t>, double> score_a;
        for (const auto& row : report.rows) {
          if (row.ok && row.sigma == sigma && row.method == tt.method_a) score_a[{row.image, row.seed}] = row.psnr;
        }
        std::vector<double> xs, ys;
        for (const auto& row : report.rows) {
          if (!row.ok || row.sigma != sigma || row.method != tt.method_b) continue;
          if (auto it = score_a.find({row.image, row.seed}); it != score_a.end()) {
            xs.push_back(it->second);
            ys.push_back(row.psnr);
          }
        }
        tt.pairs = xs.size();
        try {
          tt.result = paired_t_test(xs, ys);
        } catch (const Error& e) {
          tt.note = e.what();
        }
        report.ttests.push_back(tt);
      }
    }
  }
  return report;
}

namespace detail {

inline std::string csv_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_text(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ' ';
  }
  return s;
}

inline json json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline json json_optional(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

inline constexpr const char* kReportCsvHeader =
    "kind,image,sigma,method,seed,status,psnr,ssim,sigma_hat,rec,ac,st,pc,tv,"
    "count,psnr_std,ssim_std,t,p,df,note";

/// report.csv: data rows, then aggregate rows, then t-test rows. Runtimes are
/// only written to report.json so that the CSV is reproducible byte for byte.
inline void write_report_csv(const BenchmarkReport& report, std::ostream& out) {
  using detail::csv_number;
  using detail::csv_text;
  auto opt = [](const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); };
  out << kReportCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << "data," << csv_text(r.image) << ',' << csv_number(r.sigma) << ',' << csv_text(r.method) << ','
        << r.seed << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      out << csv_number(r.psnr) << ',' << csv_number(r.ssim) << ',' << csv_number(r.sigma_hat) << ','
          << opt(r.final_terms.rec) << ',' << opt(r.final_terms.ac) << ',' << opt(r.final_terms.st) << ','
          << opt(r.final_terms.pc) << ',' << opt(r.final_terms.tv);
    } else {
      out << ",,,,,,,";
    }
    out << ",,,,,,," << csv_text(r.error) << '\n';
  }
  for (const auto& a : report.aggregates) {
    out << "aggregate,," << csv_number(a.sigma) << ',' << csv_text(a.method) << ",,mean,"
        << csv_number(a.psnr_mean) << ',' << csv_number(a.ssim_mean) << ",,,,,,," << a.count << ','
        << csv_number(a.psnr_std) << ',' << csv_number(a.ssim_std) << ",,,,\n";
  }
  for (const auto& t : report.ttests) {
    out << "ttest,," << csv_number(t.sigma) << ',' << csv_text(t.method_a + " vs " + t.method_b) << ",,"
        << (t.result ? "ok" : "degenerate") << ",,,,,,,,," << t.pairs << ",,,";
    if (t.result) {
      out << csv_number(t.result->t_statistic) << ',' << csv_number(t.result->p_value) << ','
          << t.result->degrees_of_freedom << ',';
    } else {
      out << ",,,";
    }
    out << csv_text(t.note) << '\n';
  }
}

/// Same content as the CSV, nested by method.
inline json report_to_json(const BenchmarkReport& report) {
  json methods = json::object();
  for (const auto& r : report.rows) {
    json row = {{"image", r.image}, {"sigma", r.sigma}, {"seed", r.seed}, {"status", r.ok ? "ok" : "failed"},
                {"runtime_seconds", r.runtime_seconds}};
    if (r.ok) {
      row["psnr"] = detail::json_number(r.psnr);
      row["ssim"] = r.ssim;
      row["sigma_hat"] = r.sigma_hat;
      row["final_losses"] = {{"rec", detail::json_optional(r.final_terms.rec)},
                             {"ac", detail::json_optional(r.final_terms.ac)},
                             {"st", detail::json_optional(r.final_terms.st)},
                             {"pc", detail::json_optional(r.final_terms.pc)},
                             {"tv", detail::json_optional(r.final_terms.tv)}};
    } else {
      row["error"] = r.error;
    }
    methods[r.method]["rows"].push_back(row);
  }
  for (const auto& a : report.aggregates) {
    methods[a.method]["aggregates"].push_back({{"sigma", a.sigma},
                                               {"count", a.count},
                                               {"psnr_mean", detail::json_number(a.psnr_mean)},
                                               {"psnr_std", detail::json_number(a.psnr_std)},
                                               {"ssim_mean", a.ssim_mean},
                                               {"ssim_std", a.ssim_std}});
  }
  json ttests = json::array();
  for (const auto& t : report.ttests) {
    json row = {{"sigma", t.sigma}, {"method_a", t.method_a}, {"method_b", t.method_b}, {"pairs", t.pairs}};
    if (t.result) {
      row["t"] = t.result->t_statistic;
      row["p"] = t.result->p_value;
      row["df"] = t.result->degrees_of_freedom;
    } else {
      row["note"] = t.note;
    }
    ttests.push_back(row);
  }
  return {{"methods", methods}, {"ttests", ttests}};
}

inline void write_report(const BenchmarkReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kUnwritablePath, dir.string() + ": " + ec.message());
  {
    std::ofstream csv(dir / "report.csv", std::ios::trunc | std::ios::binary);
    if (!csv) fail(ErrorCode::kUnwritablePath, (dir / "report.csv").string());
    write_report_csv(report, csv);
  }
  std::ofstream js(dir / "report.json", std::ios::trunc);
  if (!js) fail(ErrorCode::kUnwritablePath, (dir / "report.json").string());
  js << report_to_json(report).dump(2) << '\n';
}

}  // namespace whiteprior
