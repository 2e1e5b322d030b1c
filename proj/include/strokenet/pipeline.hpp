#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "strokenet/neural.hpp"
#include "strokenet/postprocess.hpp"
#include "strokenet/signal_core.hpp"
#include "strokenet/softed.hpp"
#include "strokenet/synth.hpp"
#include "strokenet/training.hpp"

namespace strokenet::pipeline {

namespace fs = std::filesystem;

/// Every knob of the pipeline. Loaded from `key = value` text; see
/// config_reference() for keys and defaults.
struct PipelineConfig {
  std::uint64_t seed = 0;
  fs::path data_dir = "data";
  fs::path work_dir = "work";

  synth::SynthConfig synth;

  std::size_t window_length = kWindowLength;
  std::size_t window_stride = kWindowStride;

  std::size_t label_kernel_window = 100;
  double label_sigma = 10.0;

  int n_folds = 5;
  double holdout_fraction = 0.2;

  std::string arch = "GRUc1";
  bool allow_large = false;

  nn::TrainConfig train;
  int val_fold = -1;          // -1: no validation split
  std::size_t max_train_windows = 0;  // 0: use all

  ExtractorConfig extract;
  softed::WindowEvalConfig eval;
  std::string eval_partition = "holdout";

  fs::path weights_path() const { return work_dir / "weights.ssnw"; }
  fs::path history_path() const { return work_dir / "history.csv"; }
  fs::path split_path() const { return work_dir / "split.json"; }
  fs::path windows_path() const { return work_dir / "windows.jsonl"; }
  fs::path detections_path() const { return work_dir / "detections.jsonl"; }
  fs::path metrics_path() const { return work_dir / "metrics.json"; }
  fs::path histogram_path() const { return work_dir / "histogram.csv"; }
  fs::path report_csv_path() const { return work_dir / "crossval.csv"; }
  fs::path report_txt_path() const { return work_dir / "crossval.txt"; }
};

/// Sets one key; unknown keys and malformed values throw ConfigError.
void set_option(PipelineConfig& cfg, const std::string& key, const std::string& value);
/// "key = value" lines, '#' starts a comment.
void apply_config_text(PipelineConfig& cfg, const std::string& text);
PipelineConfig load_config(const fs::path& path);
/// All keys with their defaults, in config-file syntax.
std::string config_reference();

// ---------------------------------------------------------------------------

struct LabeledWindow {
  Window window;  // normalized values
  std::string partition;
  std::vector<EventLabel> events;  // window-relative
};

struct SynthOutput {
  fs::path manifest;
  std::string digest;
  std::size_t n_runs = 0;
};

/// Writes data_dir/runs/*.csv, matching *.events.jsonl, and manifest.json.
SynthOutput cmd_synth(const PipelineConfig& cfg);

/// Reads runs listed in data_dir/manifest.json; writes split.json and
/// windows.jsonl into work_dir.
std::vector<LabeledWindow> cmd_preprocess(const PipelineConfig& cfg);

std::vector<LabeledWindow> load_windows(const fs::path& path);

/// Trains on every fold except val_fold (holdout never used).
nn::TrainResult cmd_train(const PipelineConfig& cfg);

/// Writes detections.jsonl for eval_partition windows.
std::vector<softed::WindowInput> cmd_predict(const PipelineConfig& cfg);

/// Writes metrics.json and histogram.csv. With predict_from_labels the
/// smoothed ground truth stands in for model output.
softed::WindowedReport cmd_evaluate(const PipelineConfig& cfg, bool predict_from_labels = false);

struct CrossvalRow {
  std::string label;  // "fold0".., "mean"
  std::string arch;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  std::size_t n_params = 0;
};

std::vector<CrossvalRow> cmd_crossval(const PipelineConfig& cfg);
std::string format_crossval_csv(const std::vector<CrossvalRow>& rows);
std::string format_crossval_text(const std::vector<CrossvalRow>& rows);

// Building blocks shared by the commands.
std::vector<nn::Example> make_examples(const std::vector<LabeledWindow>& windows,
                                       const PipelineConfig& cfg);
std::vector<softed::WindowInput> detect_windows(const std::vector<LabeledWindow>& windows,
                                                const std::vector<std::vector<double>>& outputs,
                                                const PipelineConfig& cfg);

}  // namespace strokenet::pipeline
