#include "strokenet/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "strokenet/errors.hpp"

namespace strokenet::io {

using nlohmann::json;

std::string run_filename(const std::string& run_id, const std::string& athlete_id) {
  return "run" + run_id + "_ath" + athlete_id + ".csv";
}

std::pair<std::string, std::string> parse_run_filename(const std::string& filename) {
  static const std::regex pattern(R"(^run([A-Za-z0-9]+)_ath([A-Za-z0-9]+)\.csv$)");
  std::smatch m;
  if (!std::regex_match(filename, m, pattern))
    throw DataError("run file name '" + filename + "' does not match run<id>_ath<id>.csv");
  return {m[1].str(), m[2].str()};
}

std::string format_run_csv(const RawRun& run) {
  std::string out = "index,force,valid\n";
  char line[64];
  for (std::size_t i = 0; i < run.samples.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%d\n", i, run.samples[i].force,
                  run.samples[i].valid ? 1 : 0);
    out += line;
  }
  return out;
}

RawRun parse_run_csv(const std::string& text, std::string run_id, std::string athlete_id,
                     BoatType boat) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("run file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "index,force,valid") throw DataError("run file header must be 'index,force,valid'");

  RawRun run{std::move(run_id), std::move(athlete_id), boat, kSampleRateHz, {}};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw DataError("run file line " + std::to_string(line_no) + ": expected 3 fields");
    std::size_t index = 0;
    const char* b = line.data();
    if (std::from_chars(b, b + c1, index).ec != std::errc{} || index != run.samples.size())
      throw DataError("run file line " + std::to_string(line_no) + ": bad or out-of-order index");
    double force = 0.0;
    try {
      std::size_t used = 0;
      force = std::stod(line.substr(c1 + 1, c2 - c1 - 1), &used);
      if (used != c2 - c1 - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError("run file line " + std::to_string(line_no) + ": bad force value");
    }
    const std::string valid = line.substr(c2 + 1);
    if (valid != "0" && valid != "1")
      throw DataError("run file line " + std::to_string(line_no) + ": valid must be 0 or 1");
    run.samples.push_back({force, valid == "1"});
  }
  validate_run(run);
  return run;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void write_run(const fs::path& path, const RawRun& run) { write_text(path, format_run_csv(run)); }

RawRun read_run(const fs::path& path, BoatType boat) {
  auto [run_id, athlete_id] = parse_run_filename(path.filename().string());
  return parse_run_csv(read_text(path), run_id, athlete_id, boat);
}

namespace {

std::vector<json> parse_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed JSON line: ") + e.what());
    }
  }
  return out;
}

}  // namespace

std::string format_events(const std::vector<EventLabel>& events, Frame frame) {
  std::string out = json{{"frame", frame == Frame::Window ? "window" : "run"}}.dump() + "\n";
  for (const auto& e : events) {
    nlohmann::ordered_json rec;
    rec["t"] = e.t;
    rec["kind"] = to_string(e.kind);
    out += rec.dump() + "\n";
  }
  return out;
}

std::pair<Frame, std::vector<EventLabel>> parse_events(const std::string& text) {
  const auto lines = parse_lines(text);
  if (lines.empty() || !lines.front().contains("frame"))
    throw DataError("event file must start with a {\"frame\": ...} record");
  const auto frame_name = lines.front().at("frame").get<std::string>();
  if (frame_name != "window" && frame_name != "run")
    throw DataError("event frame must be 'window' or 'run'");
  std::vector<EventLabel> events;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto t = lines[i].at("t").get<long long>();
    if (t < 0) throw DataError("negative event index");
    events.push_back({static_cast<std::size_t>(t),
                      parse_event_kind(lines[i].at("kind").get<std::string>())});
  }
  return {frame_name == "window" ? Frame::Window : Frame::Run, std::move(events)};
}

std::string format_detections(const std::vector<DetectionBlock>& blocks) {
  std::string out;
  for (const auto& b : blocks) {
    out += json{{"window", b.window}}.dump() + "\n";
    for (const auto& d : b.detections) {
      nlohmann::ordered_json rec;
      rec["t"] = d.t;
      rec["kind"] = to_string(d.kind);
      rec["score"] = d.score;
      out += rec.dump() + "\n";
    }
  }
  return out;
}

std::vector<DetectionBlock> parse_detections(const std::string& text) {
  std::vector<DetectionBlock> out;
  for (const auto& rec : parse_lines(text)) {
    if (rec.contains("window")) {
      out.push_back({rec.at("window").get<std::string>(), {}});
      continue;
    }
    if (out.empty()) throw DataError("detection record before any window header");
    out.back().detections.push_back({rec.at("t").get<std::size_t>(),
                                     parse_event_kind(rec.at("kind").get<std::string>()),
                                     rec.at("score").get<double>()});
  }
  return out;
}

std::string format_split_plan(const SplitPlan& plan) {
  nlohmann::ordered_json doc;
  doc["seed"] = plan.seed;
  doc["n_folds"] = plan.n_folds;
  doc["partitions"] = plan.partitions;
  return doc.dump(2) + "\n";
}

SplitPlan parse_split_plan(const std::string& text) {
  try {
    const auto doc = json::parse(text);
    SplitPlan plan;
    plan.seed = doc.at("seed").get<std::uint64_t>();
    plan.n_folds = doc.at("n_folds").get<int>();
    plan.partitions = doc.at("partitions").get<std::map<std::string, std::string>>();
    return plan;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed split plan: ") + e.what());
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace strokenet::io
