// avivis command-line tool.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <iostream>
#include <map>

#include "CLI11.hpp"

#include "avivis/avivis.hpp"

namespace fs = std::filesystem;
using namespace avivis;

namespace {

enum class Kind { Int, Real, Text, List, Size };

// Each config-mirroring flag writes one JSON key.
struct FlagSpec {
  const char* flag;
  const char* key;
  Kind kind;
  const char* help;
};

const std::vector<FlagSpec>& flag_specs() {
  static const std::vector<FlagSpec> s = {
      {"--seed", "/seed", Kind::Int, "master seed (default 44)"},
      {"--jobs", "/jobs", Kind::Int, "worker threads"},
      {"--out-dir", "/output_dir", Kind::Text, "output directory"},
      {"--groups", "/features/groups", Kind::List, "feature groups, comma separated (e.g. LAB-CM,HSV-LBP)"},
      {"--resize", "/dataset/resize", Kind::Size, "resize WxH applied at load time"},
      {"--test-fraction", "/split/test_fraction", Kind::Real, "held-out fraction"},
      {"--pca-k", "/pca_k", Kind::Int, "PCA components (0 disables)"},
      {"--selector", "/selector/method", Kind::Text, "forest, gbdt, lasso, kbest_f or none"},
      {"--select-k", "/selector/k", Kind::Int, "columns kept by the selector"},
      {"--selector-trees", "/selector/forest_trees", Kind::Int, "trees in the forest selector"},
      {"--lasso-lambda", "/selector/lasso_lambda", Kind::Real, "L1 strength of the lasso selector"},
      {"--gbdt-rounds", "/selector/gbdt_rounds", Kind::Int, "boosting rounds of the gbdt selector"},
      {"--model", "/model/preset", Kind::Text, "mlp-final, mlp-screen, tree, forest or svm"},
      {"--hidden", "/model/hidden", Kind::List, "hidden layer sizes, comma separated"},
      {"--epochs", "/model/epochs", Kind::Int, "maximum epochs"},
      {"--batch-size", "/model/batch_size", Kind::Int, "mini-batch size"},
      {"--patience", "/model/patience", Kind::Int, "early-stopping patience"},
      {"--learning-rate", "/model/learning_rate", Kind::Real, "Adam learning rate"},
      {"--dropout", "/model/dropout", Kind::Real, "dropout rate"},
      {"--svm-gamma", "/model/svm_gamma", Kind::Real, "RBF gamma"},
      {"--svm-c", "/model/svm_c", Kind::Real, "SVM C"},
      {"--screen-pca-k", "/screen/pca_k", Kind::Int, "PCA components for screening"},
      {"--settings", "/screen/settings", Kind::List, "screening settings, comma separated (e.g. CH,LBP+FT)"},
      {"--spaces", "/screen/spaces", Kind::List, "screening spaces, comma separated"},
      {"--ablate-groups", "/ablate/groups", Kind::List, "groups to ablate (default all)"},
  };
  return s;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto p = s.find(',', start);
    auto piece = s.substr(start, p - start);
    if (!piece.empty()) out.push_back(piece);
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

nlohmann::json flag_value(const FlagSpec& f, const std::string& v) {
  try {
    switch (f.kind) {
      case Kind::Int: {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) break;
        return x;
      }
      case Kind::Real: {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) break;
        return x;
      }
      case Kind::Text: return v;
      case Kind::List: {
        const auto parts = split_commas(v);
        if (std::string(f.key) == "/model/hidden") {
          std::vector<long long> sizes;
          for (const auto& p : parts) sizes.push_back(std::stoll(p));
          return sizes;
        }
        return parts;
      }
      case Kind::Size: {
        const auto x = v.find_first_of("xX");
        if (x == std::string::npos) break;
        return nlohmann::json::array({std::stoi(v.substr(0, x)), std::stoi(v.substr(x + 1))});
      }
    }
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("bad value for ") + f.flag + ": " + v);
}

struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> values = std::vector<std::string>(flag_specs().size());
  std::map<const CLI::App*, std::vector<CLI::Option*>> options;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "JSON config file");
    auto& opts = options[app];
    for (std::size_t i = 0; i < flag_specs().size(); ++i)
      opts.push_back(app->add_option(flag_specs()[i].flag, values[i], flag_specs()[i].help));
  }

  // defaults < config file < environment < flags
  PipelineConfig resolve(const CLI::App* active) const {
    nlohmann::json j = config_file.empty() ? nlohmann::json::object() : read_json_file(config_file);
    apply_env_overrides(j);
    const auto& opts = options.at(active);
    for (std::size_t i = 0; i < flag_specs().size(); ++i)
      if (opts[i]->count() > 0) set_key(j, flag_specs()[i].key, flag_value(flag_specs()[i], values[i]));
    return config_from_json(j);
  }
};

fs::path or_default(const std::string& given, const PipelineConfig& cfg, const char* name) {
  return given.empty() ? cfg.output_dir / name : fs::path(given);
}

fs::path log_dir(const fs::path& out) { return out.has_parent_path() ? out.parent_path() : fs::path("."); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"avivis: colour, texture and shape features for poultry-disease image classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "avivis 1.0.0");

  ConfigFlags flags;
  std::string out, manifest, features, artifacts, model_file;
  std::vector<std::string> roots;
  std::size_t per_class = 100;
  int synth_size = 128;

  auto* ingest = app.add_subcommand("ingest", "scan class folders into a manifest");
  ingest->add_option("roots", roots, "dataset roots (one subfolder per class)")->required();
  ingest->add_option("-o,--out", out, "manifest path (default <out-dir>/manifest.tsv)");

  auto* extract = app.add_subcommand("extract", "extract feature groups into a cache");
  extract->add_option("-m,--manifest", manifest, "manifest file")->required();
  extract->add_option("-o,--out", out, "cache path (default <out-dir>/features.bin)");

  auto* screen = app.add_subcommand("screen", "colour-space screening grid");
  screen->add_option("-m,--manifest", manifest, "manifest file")->required();
  screen->add_option("-o,--out", out, "table CSV (default <out-dir>/screen.csv)");

  auto* ablate = app.add_subcommand("ablate", "leave-one-group-out ablation");
  ablate->add_option("-f,--features", features, "feature cache")->required();
  ablate->add_option("-o,--out", out, "ablation CSV (default <out-dir>/ablation.csv)");

  auto* select = app.add_subcommand("select", "fit scaler, PCA and selector");
  select->add_option("-f,--features", features, "feature cache")->required();
  select->add_option("-o,--out", out, "artifacts path (default <out-dir>/artifacts.bin)");

  auto* train = app.add_subcommand("train", "train a classifier on transformed features");
  train->add_option("-f,--features", features, "feature cache")->required();
  train->add_option("-a,--artifacts", artifacts, "artifacts file")->required();
  train->add_option("-o,--out", out, "model path (default <out-dir>/model.bin)");

  auto* evaluate = app.add_subcommand("evaluate", "classification report on the test split");
  evaluate->add_option("-f,--features", features, "feature cache")->required();
  evaluate->add_option("-a,--artifacts", artifacts, "artifacts file")->required();
  evaluate->add_option("-M,--model-file", model_file, "model file")->required();
  evaluate->add_option("-o,--out", out, "report CSV (default <out-dir>/report.csv)");

  auto* pipeline = app.add_subcommand("pipeline", "ingest, extract, select, train and evaluate");
  pipeline->add_option("-r,--root", roots, "dataset root (repeatable)");
  pipeline->add_option("-m,--manifest", manifest, "existing manifest instead of roots");

  auto* benchmark = app.add_subcommand("benchmark", "timed pipeline run, writes benchmark.csv");
  benchmark->add_option("-r,--root", roots, "dataset root (repeatable)");
  benchmark->add_option("-m,--manifest", manifest, "existing manifest instead of roots");

  auto* synth = app.add_subcommand("synth", "write a synthetic four-class image set");
  synth->add_option("-o,--out", out, "output directory")->required();
  synth->add_option("-n,--per-class", per_class, "images per class")->check(CLI::PositiveNumber);
  synth->add_option("--size", synth_size, "image side in pixels")->check(CLI::Range(16, 4096));

  auto* show = app.add_subcommand("config", "print the resolved configuration as JSON");

  for (auto* sub : {ingest, extract, screen, ablate, select, train, evaluate, pipeline, benchmark, synth, show})
    flags.attach(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    const CLI::App* active = app.get_subcommands().front();
    const PipelineConfig cfg = flags.resolve(active);
    const std::string cmd = active->get_name();
    fs::path target;
    if (cmd == "config") {
      std::cout << config_to_json(cfg).dump(2) << "\n";
      return 0;
    } else if (cmd == "ingest") {
      target = or_default(out, cfg, "manifest.tsv");
      std::vector<fs::path> r(roots.begin(), roots.end());
      const auto m = cmd_ingest(r, cfg.resize_w, cfg.resize_h, target, cfg.jobs);
      std::cerr << m.size() << " images in " << m.class_names.size() << " classes\n";
    } else if (cmd == "extract") {
      target = or_default(out, cfg, "features.bin");
      const auto x = cmd_extract(manifest, cfg, target);
      std::cerr << x.rows << " x " << x.cols << " feature matrix\n";
    } else if (cmd == "screen") {
      target = or_default(out, cfg, "screen.csv");
      cmd_screen(manifest, cfg, target);
    } else if (cmd == "ablate") {
      target = or_default(out, cfg, "ablation.csv");
      cmd_ablate(features, cfg, target);
    } else if (cmd == "select") {
      target = or_default(out, cfg, "artifacts.bin");
      cmd_select(features, cfg, target);
    } else if (cmd == "train") {
      target = or_default(out, cfg, "model.bin");
      cmd_train(features, artifacts, cfg, target);
    } else if (cmd == "evaluate") {
      target = or_default(out, cfg, "report.csv");
      const auto e = cmd_evaluate(features, artifacts, model_file, target);
      std::cout << report_csv(e.report, load_features(features).matrix.class_names);
    } else if (cmd == "pipeline" || cmd == "benchmark") {
      PipelineConfig c = cfg;
      if (!roots.empty()) c.roots.assign(roots.begin(), roots.end());
      if (!manifest.empty()) c.manifest = manifest;
      target = c.output_dir / "run";
      if (cmd == "pipeline") {
        cmd_pipeline(c);
      } else {
        std::cout << benchmark_csv(cmd_benchmark(c));
      }
    } else if (cmd == "synth") {
      target = fs::path(out) / "synth";
      const auto n = cmd_synth(out, per_class, cfg.modeling.seed, synth_size, cfg.jobs);
      std::cerr << n << " images written to " << out << "\n";
    }
    append_run_log(log_dir(target), cmd + " ok");
    return 0;
  } catch (const Error& e) {
    static const char* kPrefix[] = {"", "usage error", "data error", "numeric error"};
    std::cerr << kPrefix[static_cast<int>(e.code())] << ": " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::data);
  }
}
