#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "strokenet/label_codec.hpp"
#include "strokenet/postprocess.hpp"
#include "strokenet/signal_core.hpp"

namespace strokenet::io {

namespace fs = std::filesystem;

/// "run<run_id>_ath<athlete_id>.csv"
std::string run_filename(const std::string& run_id, const std::string& athlete_id);
/// Inverse of run_filename; throws DataError on a non-matching name.
std::pair<std::string, std::string> parse_run_filename(const std::string& filename);

/// CSV with header `index,force,valid`.
std::string format_run_csv(const RawRun& run);
RawRun parse_run_csv(const std::string& text, std::string run_id, std::string athlete_id,
                     BoatType boat = BoatType::Canoe);
void write_run(const fs::path& path, const RawRun& run);
RawRun read_run(const fs::path& path, BoatType boat = BoatType::Canoe);

enum class Frame { Window, Run };

/// JSON Lines: {"frame": "window"|"run"} then {"t": int, "kind": ...} per event.
std::string format_events(const std::vector<EventLabel>& events, Frame frame);
std::pair<Frame, std::vector<EventLabel>> parse_events(const std::string& text);

struct DetectionBlock {
  std::string window;  // "<run_id>:<start>"
  std::vector<Detection> detections;
};

/// JSON Lines: {"window": ...} header followed by {"t","kind","score"} records.
std::string format_detections(const std::vector<DetectionBlock>& blocks);
std::vector<DetectionBlock> parse_detections(const std::string& text);

std::string format_split_plan(const SplitPlan& plan);
SplitPlan parse_split_plan(const std::string& text);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace strokenet::io
