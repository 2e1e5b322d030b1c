// strokenet: paddle-stroke event detection pipeline.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "strokenet/errors.hpp"
#include "strokenet/neural.hpp"
#include "strokenet/pipeline.hpp"

namespace sp = strokenet::pipeline;
namespace nn = strokenet::nn;

namespace {

struct CommonFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::string data;
  std::string work;
};

void add_common(CLI::App* cmd, CommonFlags& f, const char* out_help) {
  cmd->add_option("-c,--config", f.config, "config file (key = value)");
  cmd->add_option("-s,--set", f.overrides, "override one key, e.g. --set train.epochs=5");
  cmd->add_option("-o,--out", f.out, out_help);
  cmd->add_option("--data", f.data, "dataset directory");
  cmd->add_option("--work", f.work, "working directory for derived files");
}

sp::PipelineConfig resolve(const CommonFlags& f, bool out_is_data) {
  sp::PipelineConfig cfg = f.config.empty() ? sp::PipelineConfig{} : sp::load_config(f.config);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw strokenet::ConfigError("--set expects key=value, got '" + kv + "'");
    sp::set_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!f.data.empty()) cfg.data_dir = f.data;
  if (!f.work.empty()) cfg.work_dir = f.work;
  if (!f.out.empty()) (out_is_data ? cfg.data_dir : cfg.work_dir) = f.out;
  return cfg;
}

void print_metrics(const strokenet::softed::WindowedReport& r) {
  const auto show = [](const char* name, const std::optional<double>& v) {
    if (v)
      std::printf("%-10s %.4f\n", name, *v);
    else
      std::printf("%-10s undefined\n", name);
  };
  std::printf("windows    %zu\n", r.n_windows);
  show("precision", r.metrics.precision);
  show("recall", r.metrics.recall);
  show("f1", r.metrics.f1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paddle-stroke onset/ending detection from force signals"};
  app.require_subcommand(1);

  CommonFlags f;
  std::string arch_flag;
  bool count_only = false;
  bool from_labels = false;
  std::vector<std::string> arch_names;
  bool show_config = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, f, "dataset directory (created if missing)");
  auto* prep = app.add_subcommand("preprocess", "window, normalize and split the dataset");
  add_common(prep, f, "working directory");
  auto* train = app.add_subcommand("train", "train a model on the training folds");
  add_common(train, f, "working directory");
  train->add_option("--arch", arch_flag, "architecture name");
  train->add_flag("--count-only", count_only, "print the parameter count and exit");
  auto* predict = app.add_subcommand("predict", "write detections for the evaluation partition");
  add_common(predict, f, "working directory");
  auto* eval = app.add_subcommand("evaluate", "windowed soft scoring of the evaluation partition");
  add_common(eval, f, "working directory");
  eval->add_flag("--predict-from-labels", from_labels,
                 "use the smoothed ground truth in place of model output");
  auto* cv = app.add_subcommand("crossval", "train and score every fold");
  add_common(cv, f, "working directory");
  cv->add_option("--arch", arch_flag, "architecture name");
  auto* arch = app.add_subcommand("arch", "print layer tables and parameter counts");
  arch->add_option("names", arch_names, "architecture names (default: all)");
  auto* config = app.add_subcommand("config", "print every config key with its default");
  config->callback([&] { show_config = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (show_config) {
      std::cout << sp::config_reference();
      return 0;
    }
    if (arch->parsed()) {
      if (arch_names.empty()) arch_names = nn::architecture_names();
      for (const auto& name : arch_names) std::cout << nn::summary_table(nn::build_architecture(name)) << "\n";
      return 0;
    }

    auto cfg = resolve(f, synth->parsed());
    if (!arch_flag.empty()) sp::set_option(cfg, "model.arch", arch_flag);

    if (synth->parsed()) {
      const auto out = sp::cmd_synth(cfg);
      std::printf("wrote %zu runs, manifest %s (digest %s)\n", out.n_runs, out.manifest.c_str(),
                  out.digest.c_str());
    } else if (prep->parsed()) {
      const auto windows = sp::cmd_preprocess(cfg);
      std::printf("wrote %zu windows to %s\n", windows.size(), cfg.windows_path().c_str());
    } else if (train->parsed()) {
      const auto spec = nn::build_architecture(cfg.arch);
      if (count_only) {
        std::cout << nn::format_count(nn::count_params(spec)) << "\n";
        return 0;
      }
      const auto result = sp::cmd_train(cfg);
      if (!result.history.empty())
        std::printf("trained %s for %zu epochs, final train loss %.6g\n", spec.name.c_str(),
                    result.history.size(), result.history.back().train_loss);
      std::printf("weights: %s\n", cfg.weights_path().c_str());
    } else if (predict->parsed()) {
      const auto inputs = sp::cmd_predict(cfg);
      std::printf("wrote detections for %zu windows to %s\n", inputs.size(),
                  cfg.detections_path().c_str());
    } else if (eval->parsed()) {
      print_metrics(sp::cmd_evaluate(cfg, from_labels));
    } else if (cv->parsed()) {
      std::cout << sp::format_crossval_text(sp::cmd_crossval(cfg));
    }
    return 0;
  } catch (const strokenet::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const strokenet::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const strokenet::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
