#pragma once
// Command implementations behind the avivis executable. Each writes its
// outputs to the given paths; timestamps only go to run.log in the output
// directory.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include <sys/resource.h>

#include "avivis/config.hpp"
#include "avivis/plot.hpp"
#include "avivis/synth.hpp"

namespace avivis {

namespace fs = std::filesystem;

/// Receives warnings and progress lines. Defaults to stderr.
using Reporter = std::function<void(const std::string&)>;

inline Reporter stderr_reporter() {
  return [](const std::string& s) { std::cerr << s << "\n"; };
}

namespace detail {

inline void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

inline void write_text(const fs::path& p, const std::string& s) {
  ensure_parent(p);
  write_bytes(p, s);
}

inline void warn_all(const Reporter& r, const std::vector<std::string>& w) {
  if (!r) return;
  for (const auto& s : w) r("warning: " + s);
}

inline fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

}  // namespace detail

/// Appends "<UTC time> <line>" to dir/run.log.
inline void append_run_log(const fs::path& dir, const std::string& line) {
  fs::create_directories(dir.empty() ? fs::path(".") : dir);
  std::ofstream f(dir / "run.log", std::ios::app);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char ts[32];
  std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", &tm);
  f << ts << " " << line << "\n";
}

// ---- ingest / extract

inline Manifest cmd_ingest(const std::vector<fs::path>& roots, int resize_w, int resize_h, const fs::path& out,
                           std::size_t jobs, const Reporter& rep = stderr_reporter()) {
  if (roots.empty()) throw UsageError("ingest needs at least one dataset root");
  Manifest m = scan_dataset(roots, resize_w, resize_h, jobs);
  detail::warn_all(rep, m.warnings);
  detail::ensure_parent(out);
  save_manifest(m, out);
  return m;
}

inline FeatureMatrix cmd_extract(const fs::path& manifest, const PipelineConfig& cfg, const fs::path& out) {
  const Manifest m = load_manifest(manifest);
  FeatureMatrix x = assemble(m, cfg.groups, cfg.params, cfg.jobs);
  detail::ensure_parent(out);
  save_features(x, out);
  return x;
}

inline FeatureMatrix load_cache(const fs::path& p, const Reporter& rep) {
  auto load = load_features(p);
  detail::warn_all(rep, load.warnings);
  return std::move(load.matrix);
}

// ---- screen / ablate

/// Writes the accuracy table to `out` and the per-cell metrics to
/// <stem>_cells.csv.
inline std::vector<ScreenCell> cmd_screen(const fs::path& manifest, const PipelineConfig& cfg, const fs::path& out) {
  const Manifest m = load_manifest(manifest);
  auto cells = screen_grid(m, cfg.screen_settings, cfg.screen_spaces, cfg.params, cfg.screen_modeling());
  detail::write_text(out, screen_table_csv(cells));
  detail::write_text(detail::sibling(out, "_cells.csv"), screen_long_csv(cells));
  return cells;
}

inline std::vector<AblationRow> cmd_ablate(const fs::path& cache, const PipelineConfig& cfg, const fs::path& out,
                                           const Reporter& rep = stderr_reporter()) {
  const FeatureMatrix x = load_cache(cache, rep);
  ModelingConfig mc = cfg.modeling;
  mc.jobs = cfg.jobs;
  auto rows = ablate_groups(x, cfg.ablate_groups, mc);
  detail::write_text(out, ablation_csv(rows));
  return rows;
}

// ---- select / train / evaluate

inline PipelineArtifacts cmd_select(const fs::path& cache, const PipelineConfig& cfg, const fs::path& out,
                                    const Reporter& rep = stderr_reporter()) {
  const FeatureMatrix x = load_cache(cache, rep);
  ModelingConfig mc = cfg.modeling;
  mc.jobs = cfg.jobs;
  PipelineArtifacts a = fit_transforms(x, make_split(x, mc), mc);
  detail::warn_all(rep, a.warnings);
  detail::ensure_parent(out);
  save_artifacts(a, out);
  return a;
}

/// Writes the model, <stem>_history.csv and <stem>_curves.png (network
/// presets only for the last two).
inline TrainOutcome cmd_train(const fs::path& cache, const fs::path& artifacts, const PipelineConfig& cfg,
                              const fs::path& out, const Reporter& rep = stderr_reporter()) {
  const FeatureMatrix raw = load_cache(cache, rep);
  const PipelineArtifacts a = load_artifacts(artifacts);
  const FeatureMatrix x = apply_transforms(raw, a);
  ClassifierConfig cc = cfg.modeling.classifier;
  cc.jobs = cfg.jobs;
  TrainOutcome t = train_classifier(x, a.split.train, cc, cfg.modeling.seed);
  detail::warn_all(rep, t.warnings);
  detail::ensure_parent(out);
  save_classifier(t.classifier, out);
  if (!t.history.empty()) {
    detail::write_text(detail::sibling(out, "_history.csv"), history_csv(t.history));
    write_png(detail::sibling(out, "_curves.png"), render_history(t.history));
  }
  return t;
}

inline std::string summary_json(const Evaluation& e, const std::vector<std::string>& names) {
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t k = 0; k < e.report.per_class.size(); ++k) {
    const auto& m = e.report.per_class[k];
    per_class[k < names.size() ? names[k] : std::to_string(k)] = {
        {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  }
  std::vector<std::vector<std::size_t>> cm(e.confusion.n_classes);
  for (std::size_t t = 0; t < cm.size(); ++t)
    for (std::size_t p = 0; p < cm.size(); ++p) cm[t].push_back(e.confusion.at(t, p));
  auto avg = [](const ClassMetrics& m) {
    return nlohmann::json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  };
  return nlohmann::json{{"accuracy", e.report.accuracy},
                        {"macro_avg", avg(e.report.macro)},
                        {"weighted_avg", avg(e.report.weighted)},
                        {"per_class", per_class},
                        {"confusion", cm},
                        {"classes", names}}
             .dump(2) +
         "\n";
}

/// Writes the report CSV plus <stem>_confusion.csv, <stem>_confusion.png and
/// <stem>_summary.json.
inline Evaluation cmd_evaluate(const fs::path& cache, const fs::path& artifacts, const fs::path& model,
                               const fs::path& out, const Reporter& rep = stderr_reporter()) {
  const FeatureMatrix raw = load_cache(cache, rep);
  const PipelineArtifacts a = load_artifacts(artifacts);
  const Classifier c = load_classifier(model);
  const FeatureMatrix x = apply_transforms(raw, a);
  if (x.cols != c.input_dim) throw DataError("model input width does not match the transformed features");
  Evaluation e = evaluate_rows(c, x, a.split.test);
  detail::write_text(out, report_csv(e.report, raw.class_names));
  detail::write_text(detail::sibling(out, "_confusion.csv"), confusion_csv(e.confusion, raw.class_names));
  write_png(detail::sibling(out, "_confusion.png"), render_confusion(e.confusion, raw.class_names));
  detail::write_text(detail::sibling(out, "_summary.json"), summary_json(e, raw.class_names));
  return e;
}

// ---- pipeline / benchmark

struct PipelinePaths {
  fs::path manifest, features, artifacts, model, report, config;

  explicit PipelinePaths(const fs::path& dir)
      : manifest(dir / "manifest.tsv"),
        features(dir / "features.bin"),
        artifacts(dir / "artifacts.bin"),
        model(dir / "model.bin"),
        report(dir / "report.csv"),
        config(dir / "config.json") {}
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
  double peak_rss_mb = 0.0;
};

inline double peak_rss_mb() {
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  return static_cast<double>(ru.ru_maxrss) / 1024.0;  // ru_maxrss is KiB on Linux
}

/// ingest (when roots are configured) -> extract -> select -> train ->
/// evaluate, all inside cfg.output_dir. Returns per-stage timings.
inline std::vector<StageTiming> cmd_pipeline(const PipelineConfig& cfg, const Reporter& rep = stderr_reporter()) {
  const PipelinePaths p(cfg.output_dir);
  fs::create_directories(cfg.output_dir);
  detail::write_text(p.config, config_to_json(cfg).dump(2) + "\n");
  std::vector<StageTiming> t;
  auto stage = [&](const std::string& name, const std::function<void()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    t.push_back({name, dt.count(), peak_rss_mb()});
    if (rep) rep(name + " done (" + fmt(dt.count(), 2) + " s)");
  };
  fs::path manifest = cfg.manifest;
  if (!cfg.roots.empty()) {
    stage("ingest", [&] { cmd_ingest(cfg.roots, cfg.resize_w, cfg.resize_h, p.manifest, cfg.jobs, rep); });
    manifest = p.manifest;
  }
  if (manifest.empty()) throw UsageError("pipeline needs dataset roots or a manifest");
  stage("extract", [&] { cmd_extract(manifest, cfg, p.features); });
  stage("select", [&] { cmd_select(p.features, cfg, p.artifacts, rep); });
  stage("train", [&] { cmd_train(p.features, p.artifacts, cfg, p.model, rep); });
  stage("evaluate", [&] {
    const auto e = cmd_evaluate(p.features, p.artifacts, p.model, p.report, rep);
    if (rep) rep("test accuracy " + fmt(e.report.accuracy, 4));
  });
  return t;
}

inline std::string benchmark_csv(const std::vector<StageTiming>& t) {
  std::string s = "stage,seconds,peak_rss_mb\n";
  double total = 0.0, peak = 0.0;
  for (const auto& x : t) {
    s += x.stage + "," + fmt(x.seconds, 3) + "," + fmt(x.peak_rss_mb, 1) + "\n";
    total += x.seconds;
    peak = std::max(peak, x.peak_rss_mb);
  }
  s += "total," + fmt(total, 3) + "," + fmt(peak, 1) + "\n";
  return s;
}

/// Timed pipeline run; writes benchmark.csv in the output directory.
inline std::vector<StageTiming> cmd_benchmark(const PipelineConfig& cfg, const Reporter& rep = stderr_reporter()) {
  auto t = cmd_pipeline(cfg, rep);
  detail::write_text(cfg.output_dir / "benchmark.csv", benchmark_csv(t));
  return t;
}

inline std::size_t cmd_synth(const fs::path& out, std::size_t per_class, std::uint64_t seed, int size, std::size_t jobs) {
  return write_synth_dataset(out, per_class, seed, size, jobs);
}

}  // namespace avivis
