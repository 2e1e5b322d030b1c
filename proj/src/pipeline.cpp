#include "strokenet/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "strokenet/errors.hpp"
#include "strokenet/io.hpp"
#include "strokenet/weights_io.hpp"

namespace strokenet::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* b = value.data();
  const char* e = b + value.size();
  const auto [ptr, ec] = std::from_chars(b, e, out);
  if (ec != std::errc{} || ptr != e)
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Option {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
Option number(T PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_number<T>(k, v);
          },
          [member](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return fmt_double(c.*member);
            else
              return std::to_string(c.*member);
          }};
}

// Nested members are reached through an accessor lambda.
template <typename T, typename Access>
Option nested(Access access) {
  return {[access](PipelineConfig& c, const std::string& k, const std::string& v) {
            access(c) = parse_number<T>(k, v);
          },
          [access](const PipelineConfig& c) {
            const T value = access(const_cast<PipelineConfig&>(c));
            if constexpr (std::is_floating_point_v<T>)
              return fmt_double(value);
            else
              return std::to_string(value);
          }};
}

const std::vector<std::pair<std::string, Option>>& options() {
  static const std::vector<std::pair<std::string, Option>> table = {
      {"seed", number(&PipelineConfig::seed)},
      {"data_dir",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.data_dir = v; },
        [](const PipelineConfig& c) { return c.data_dir.string(); }}},
      {"work_dir",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.work_dir = v; },
        [](const PipelineConfig& c) { return c.work_dir.string(); }}},
      {"synth.n_athletes", nested<int>([](PipelineConfig& c) -> int& { return c.synth.n_athletes; })},
      {"synth.runs_per_athlete",
       nested<int>([](PipelineConfig& c) -> int& { return c.synth.runs_per_athlete; })},
      {"synth.run_duration",
       nested<double>([](PipelineConfig& c) -> double& { return c.synth.run_duration; })},
      {"synth.stroke_rate_min",
       nested<double>([](PipelineConfig& c) -> double& { return c.synth.stroke_rate_min; })},
      {"synth.stroke_rate_max",
       nested<double>([](PipelineConfig& c) -> double& { return c.synth.stroke_rate_max; })},
      {"synth.rise_min", nested<double>([](PipelineConfig& c) -> double& { return c.synth.rise_min; })},
      {"synth.rise_max", nested<double>([](PipelineConfig& c) -> double& { return c.synth.rise_max; })},
      {"synth.duty_min", nested<double>([](PipelineConfig& c) -> double& { return c.synth.duty_min; })},
      {"synth.duty_max", nested<double>([](PipelineConfig& c) -> double& { return c.synth.duty_max; })},
      {"synth.rate_jitter",
       nested<double>([](PipelineConfig& c) -> double& { return c.synth.rate_jitter; })},
      {"synth.amplitude_jitter",
       nested<double>([](PipelineConfig& c) -> double& { return c.synth.amplitude_jitter; })},
      {"synth.baseline_noise",
       nested<double>([](PipelineConfig& c) -> double& { return c.synth.baseline_noise; })},
      {"synth.dropout_prob",
       nested<double>([](PipelineConfig& c) -> double& { return c.synth.dropout_prob; })},
      {"window.length", number(&PipelineConfig::window_length)},
      {"window.stride", number(&PipelineConfig::window_stride)},
      {"label.kernel_window", number(&PipelineConfig::label_kernel_window)},
      {"label.sigma", number(&PipelineConfig::label_sigma)},
      {"split.n_folds", number(&PipelineConfig::n_folds)},
      {"split.holdout_fraction", number(&PipelineConfig::holdout_fraction)},
      {"model.arch",
       {[](PipelineConfig& c, const std::string&, const std::string& v) {
          c.arch = nn::build_architecture(v).name;
        },
        [](const PipelineConfig& c) { return c.arch; }}},
      {"model.allow_large",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.allow_large = parse_bool(k, v);
        },
        [](const PipelineConfig& c) { return std::string(c.allow_large ? "true" : "false"); }}},
      {"train.learning_rate",
       nested<double>([](PipelineConfig& c) -> double& { return c.train.learning_rate; })},
      {"train.epochs", nested<int>([](PipelineConfig& c) -> int& { return c.train.epochs; })},
      {"train.batch_size", nested<int>([](PipelineConfig& c) -> int& { return c.train.batch_size; })},
      {"train.threads", nested<int>([](PipelineConfig& c) -> int& { return c.train.threads; })},
      {"train.optimizer",
       {[](PipelineConfig& c, const std::string&, const std::string& v) {
          c.train.optimizer = nn::parse_optimizer(v);
        },
        [](const PipelineConfig& c) { return nn::to_string(c.train.optimizer); }}},
      {"train.val_fold", number(&PipelineConfig::val_fold)},
      {"train.max_windows", number(&PipelineConfig::max_train_windows)},
      {"extract.sg_window",
       nested<std::size_t>([](PipelineConfig& c) -> std::size_t& { return c.extract.sg_window; })},
      {"extract.sg_order", nested<int>([](PipelineConfig& c) -> int& { return c.extract.sg_order; })},
      {"extract.upper_pct",
       nested<double>([](PipelineConfig& c) -> double& { return c.extract.upper_pct; })},
      {"extract.lower_pct",
       nested<double>([](PipelineConfig& c) -> double& { return c.extract.lower_pct; })},
      {"extract.cluster_radius",
       nested<std::size_t>([](PipelineConfig& c) -> std::size_t& { return c.extract.cluster_radius; })},
      {"eval.k", nested<std::size_t>([](PipelineConfig& c) -> std::size_t& { return c.eval.k; })},
      {"eval.h", nested<std::size_t>([](PipelineConfig& c) -> std::size_t& { return c.eval.h; })},
      {"eval.partition",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.eval_partition = v; },
        [](const PipelineConfig& c) { return c.eval_partition; }}},
  };
  return table;
}

}  // namespace

void set_option(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [name, opt] : options()) {
    if (name == key) {
      opt.set(cfg, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(PipelineConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    set_option(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

PipelineConfig load_config(const fs::path& path) {
  PipelineConfig cfg;
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  apply_config_text(cfg, text);
  return cfg;
}

std::string config_reference() {
  const PipelineConfig defaults;
  std::string out;
  for (const auto& [name, opt] : options()) out += name + " = " + opt.get(defaults) + "\n";
  return out;
}

// ---------------------------------------------------------------------------

namespace {

ordered_json config_json(const PipelineConfig& cfg) {
  ordered_json doc;
  for (const auto& [name, opt] : options()) doc[name] = opt.get(cfg);
  return doc;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ManifestRun {
  std::string run_id, athlete_id;
  BoatType boat = BoatType::Canoe;
  fs::path signal, events;
};

std::vector<ManifestRun> read_manifest(const fs::path& data_dir) {
  const auto path = data_dir / "manifest.json";
  json doc;
  try {
    doc = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
  std::vector<ManifestRun> out;
  for (const auto& r : doc.at("runs")) {
    out.push_back({r.at("run_id").get<std::string>(), r.at("athlete_id").get<std::string>(),
                   parse_boat_type(r.value("boat_type", "canoe")),
                   data_dir / r.at("signal").get<std::string>(),
                   data_dir / r.at("events").get<std::string>()});
  }
  if (out.empty()) throw DataError("manifest lists no runs");
  return out;
}

}  // namespace

SynthOutput cmd_synth(const PipelineConfig& cfg) {
  auto synth_cfg = cfg.synth;
  synth_cfg.seed = cfg.seed;
  const auto runs = synth::generate_dataset(synth_cfg);

  fs::create_directories(cfg.data_dir / "runs");
  ordered_json manifest;
  manifest["created"] = timestamp_utc();
  std::string digest_input;
  ordered_json body;
  body["seed"] = cfg.seed;
  body["config"] = config_json(cfg);
  body["runs"] = ordered_json::array();
  for (const auto& r : runs) {
    const auto csv = io::run_filename(r.run.run_id, r.run.athlete_id);
    const auto events = "run" + r.run.run_id + "_ath" + r.run.athlete_id + ".events.jsonl";
    const auto csv_text = io::format_run_csv(r.run);
    const auto events_text = io::format_events(r.events, io::Frame::Run);
    io::write_text(cfg.data_dir / "runs" / csv, csv_text);
    io::write_text(cfg.data_dir / "runs" / events, events_text);
    digest_input += csv_text;
    digest_input += events_text;

    ordered_json entry;
    entry["run_id"] = r.run.run_id;
    entry["athlete_id"] = r.run.athlete_id;
    entry["boat_type"] = to_string(r.run.boat_type);
    entry["signal"] = "runs/" + csv;
    entry["events"] = "runs/" + events;
    entry["n_samples"] = r.run.size();
    entry["n_events"] = r.events.size();
    entry["stroke_rate"] = r.style.stroke_rate;
    body["runs"].push_back(std::move(entry));
  }
  digest_input += body.dump();
  const auto digest = io::fnv1a_hex(digest_input);
  for (auto& [k, v] : body.items()) manifest[k] = v;
  manifest["digest"] = digest;
  const auto path = cfg.data_dir / "manifest.json";
  io::write_text(path, manifest.dump(2) + "\n");
  return {path, digest, runs.size()};
}

std::vector<LabeledWindow> cmd_preprocess(const PipelineConfig& cfg) {
  const auto manifest = read_manifest(cfg.data_dir);
  std::vector<RawRun> runs;
  std::vector<std::vector<EventLabel>> run_events;
  for (const auto& m : manifest) {
    auto run = io::read_run(m.signal, m.boat);
    if (run.run_id != m.run_id || run.athlete_id != m.athlete_id)
      throw DataError("manifest entry does not match file name " + m.signal.string());
    auto [frame, events] = io::parse_events(io::read_text(m.events));
    if (frame != io::Frame::Run) throw DataError(m.events.string() + ": expected run frame");
    runs.push_back(std::move(run));
    run_events.push_back(std::move(events));
  }

  const auto plan = subject_aware_split(runs, cfg.n_folds, cfg.holdout_fraction, cfg.seed);
  io::write_text(cfg.split_path(), io::format_split_plan(plan));

  std::vector<LabeledWindow> out;
  std::string lines;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto windows = preprocess_run(runs[r], cfg.window_length, cfg.window_stride);
    if (windows.empty())
      std::fprintf(stderr, "warning: run %s is shorter than one window\n", runs[r].run_id.c_str());
    for (const auto& w : windows) {
      LabeledWindow lw{w, plan.partition_of(w.athlete_id),
                       events_in_window(run_events[r], w.start, cfg.window_length)};
      ordered_json rec;
      rec["run_id"] = w.run_id;
      rec["athlete_id"] = w.athlete_id;
      rec["partition"] = lw.partition;
      rec["start"] = w.start;
      rec["values"] = w.values;
      rec["events"] = ordered_json::array();
      for (const auto& e : lw.events) rec["events"].push_back({{"t", e.t}, {"kind", to_string(e.kind)}});
      lines += rec.dump() + "\n";
      out.push_back(std::move(lw));
    }
  }
  io::write_text(cfg.windows_path(), lines);
  return out;
}

std::vector<LabeledWindow> load_windows(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::vector<LabeledWindow> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto rec = json::parse(line);
      LabeledWindow lw;
      lw.window.run_id = rec.at("run_id").get<std::string>();
      lw.window.athlete_id = rec.at("athlete_id").get<std::string>();
      lw.window.start = rec.at("start").get<std::size_t>();
      lw.window.values = rec.at("values").get<std::vector<double>>();
      lw.partition = rec.at("partition").get<std::string>();
      for (const auto& e : rec.at("events"))
        lw.events.push_back({e.at("t").get<std::size_t>(),
                             parse_event_kind(e.at("kind").get<std::string>())});
      out.push_back(std::move(lw));
    } catch (const json::exception& e) {
      throw DataError("malformed window record in " + path.string() + ": " + e.what());
    }
  }
  if (out.empty()) throw DataError(path.string() + " holds no windows; run preprocess first");
  return out;
}

std::vector<nn::Example> make_examples(const std::vector<LabeledWindow>& windows,
                                       const PipelineConfig& cfg) {
  std::vector<nn::Example> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    const auto labels = encode_ternary(w.events, w.window.values.size());
    out.push_back({w.window.values, gaussian_smooth(labels, cfg.label_kernel_window, cfg.label_sigma)});
  }
  return out;
}

namespace {

std::vector<LabeledWindow> select(const std::vector<LabeledWindow>& all,
                                  const std::function<bool(const std::string&)>& keep) {
  std::vector<LabeledWindow> out;
  for (const auto& w : all)
    if (keep(w.partition)) out.push_back(w);
  return out;
}

// Deterministic evenly spaced subsample.
std::vector<LabeledWindow> thin(std::vector<LabeledWindow> windows, std::size_t max_count) {
  if (max_count == 0 || windows.size() <= max_count) return windows;
  std::vector<LabeledWindow> out;
  out.reserve(max_count);
  for (std::size_t i = 0; i < max_count; ++i) out.push_back(windows[i * windows.size() / max_count]);
  return out;
}

nn::TrainResult train_on(const PipelineConfig& cfg, const std::vector<LabeledWindow>& train_w,
                         const std::vector<LabeledWindow>& val_w) {
  const auto spec = nn::build_architecture(cfg.arch);
  if (spec.window_length != cfg.window_length)
    throw ConfigError("architecture expects windows of " + std::to_string(spec.window_length) +
                      " samples");
  const auto train = make_examples(thin(train_w, cfg.max_train_windows), cfg);
  const auto val = make_examples(val_w, cfg);
  auto tcfg = cfg.train;
  tcfg.seed = cfg.seed;
  std::optional<nn::ModelParams> initial;
  if (nn::count_params(spec) > nn::kLargeModelParams)
    initial = nn::init_params(spec, mix_seed(cfg.seed, 1), cfg.allow_large);
  auto result = nn::train_model(spec, train, val, tcfg, std::move(initial));
  if (result.diverged) throw NumericError("training diverged: " + result.message);
  return result;
}

std::string history_csv(const std::vector<nn::EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_loss\n";
  char line[96];
  for (const auto& h : history) {
    if (h.val_loss)
      std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", h.epoch, h.train_loss, *h.val_loss);
    else
      std::snprintf(line, sizeof line, "%d,%.17g,\n", h.epoch, h.train_loss);
    out += line;
  }
  return out;
}

std::string window_tag(const LabeledWindow& w) {
  return w.window.run_id + ":" + std::to_string(w.window.start);
}

std::vector<std::vector<double>> run_model(const PipelineConfig& cfg, const nn::ModelParams& params,
                                           const std::vector<LabeledWindow>& windows) {
  const auto spec = nn::build_architecture(cfg.arch);
  nn::check_params(spec, params);
  std::vector<std::vector<double>> outputs;
  outputs.reserve(windows.size());
  for (const auto& w : windows) outputs.push_back(nn::predict(spec, params, w.window.values));
  return outputs;
}

std::vector<std::vector<double>> label_outputs(const PipelineConfig& cfg,
                                               const std::vector<LabeledWindow>& windows) {
  std::vector<std::vector<double>> outputs;
  for (const auto& e : make_examples(windows, cfg)) outputs.push_back(e.target);
  return outputs;
}

}  // namespace

nn::TrainResult cmd_train(const PipelineConfig& cfg) {
  const auto all = load_windows(cfg.windows_path());
  const std::string val_label = cfg.val_fold >= 0 ? SplitPlan::fold_label(cfg.val_fold) : "";
  const auto train_w = select(all, [&](const std::string& p) {
    return p != SplitPlan::kHoldout && p != val_label;
  });
  const auto val_w =
      val_label.empty() ? std::vector<LabeledWindow>{}
                        : select(all, [&](const std::string& p) { return p == val_label; });
  if (train_w.empty()) throw DataError("no training windows");
  auto result = train_on(cfg, train_w, val_w);
  nn::save_weights(cfg.weights_path(), result.params);
  io::write_text(cfg.history_path(), history_csv(result.history));
  return result;
}

std::vector<softed::WindowInput> detect_windows(const std::vector<LabeledWindow>& windows,
                                                const std::vector<std::vector<double>>& outputs,
                                                const PipelineConfig& cfg) {
  std::vector<softed::WindowInput> out;
  out.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out.push_back({windows[i].events, extract_events(outputs[i], cfg.extract),
                   windows[i].window.values.size()});
  }
  return out;
}

std::vector<softed::WindowInput> cmd_predict(const PipelineConfig& cfg) {
  const auto windows = select(load_windows(cfg.windows_path()),
                              [&](const std::string& p) { return p == cfg.eval_partition; });
  if (windows.empty()) throw DataError("no windows in partition '" + cfg.eval_partition + "'");
  const auto params = nn::load_weights(cfg.weights_path());
  const auto inputs = detect_windows(windows, run_model(cfg, params, windows), cfg);
  std::vector<io::DetectionBlock> blocks;
  for (std::size_t i = 0; i < windows.size(); ++i)
    blocks.push_back({window_tag(windows[i]), inputs[i].detections});
  io::write_text(cfg.detections_path(), io::format_detections(blocks));
  return inputs;
}

softed::WindowedReport cmd_evaluate(const PipelineConfig& cfg, bool predict_from_labels) {
  const auto windows = select(load_windows(cfg.windows_path()),
                              [&](const std::string& p) { return p == cfg.eval_partition; });
  if (windows.empty()) throw DataError("no windows in partition '" + cfg.eval_partition + "'");
  softed::valid_range(cfg.window_length, cfg.eval.h);  // window/margin consistency
  const auto outputs = predict_from_labels
                           ? label_outputs(cfg, windows)
                           : run_model(cfg, nn::load_weights(cfg.weights_path()), windows);
  const auto inputs = detect_windows(windows, outputs, cfg);
  const auto report = softed::evaluate_windowed(inputs, cfg.eval);
  io::write_text(cfg.metrics_path(), softed::metrics_json(report, cfg.eval));
  io::write_text(cfg.histogram_path(), report.histogram.to_csv());
  return report;
}

std::vector<CrossvalRow> cmd_crossval(const PipelineConfig& cfg) {
  const auto all = load_windows(cfg.windows_path());
  const auto spec = nn::build_architecture(cfg.arch);
  const auto n_params = nn::count_params(spec);
  std::vector<CrossvalRow> rows;
  for (int fold = 0; fold < cfg.n_folds; ++fold) {
    const auto label = SplitPlan::fold_label(fold);
    const auto train_w = select(all, [&](const std::string& p) {
      return p != SplitPlan::kHoldout && p != label;
    });
    const auto eval_w = select(all, [&](const std::string& p) { return p == label; });
    if (train_w.empty() || eval_w.empty())
      throw DataError("fold " + label + " has no training or evaluation windows");
    const auto result = train_on(cfg, train_w, {});
    const auto report =
        softed::evaluate_windowed(detect_windows(eval_w, run_model(cfg, result.params, eval_w), cfg),
                                  cfg.eval);
    rows.push_back({label, spec.name, report.metrics.precision.value_or(0.0),
                    report.metrics.recall.value_or(0.0), report.metrics.f1.value_or(0.0), n_params});
  }
  CrossvalRow mean{"mean", spec.name, 0, 0, 0, n_params};
  for (const auto& r : rows) {
    mean.precision += r.precision / static_cast<double>(rows.size());
    mean.recall += r.recall / static_cast<double>(rows.size());
    mean.f1 += r.f1 / static_cast<double>(rows.size());
  }
  rows.push_back(mean);
  io::write_text(cfg.report_csv_path(), format_crossval_csv(rows));
  io::write_text(cfg.report_txt_path(), format_crossval_text(rows));
  return rows;
}

std::string format_crossval_csv(const std::vector<CrossvalRow>& rows) {
  std::string out = "fold,architecture,precision,recall,f1,n_parameters\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%s,%.4f,%.4f,%.4f,%zu\n", r.label.c_str(), r.arch.c_str(),
                  r.precision, r.recall, r.f1, r.n_params);
    out += line;
  }
  return out;
}

std::string format_crossval_text(const std::vector<CrossvalRow>& rows) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-12s %9s %9s %9s %14s\n", "fold", "architecture",
                "precision", "recall", "F1", "# parameters");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-8s %-12s %9.2f %9.2f %9.2f %14zu\n", r.label.c_str(),
                  r.arch.c_str(), r.precision, r.recall, r.f1, r.n_params);
    out += line;
  }
  return out;
}

}  // namespace strokenet::pipeline
