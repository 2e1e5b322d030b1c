#include "strokenet/label_codec.hpp"

#include <algorithm>
#include <cmath>

#include "strokenet/errors.hpp"

namespace strokenet {

std::string to_string(EventKind kind) { return kind == EventKind::Onset ? "onset" : "ending"; }

EventKind parse_event_kind(const std::string& text) {
  if (text == "onset") return EventKind::Onset;
  if (text == "ending") return EventKind::Ending;
  throw DataError("unknown event kind '" + text + "'");
}

LabelVector encode_ternary(std::span<const EventLabel> events, std::size_t length) {
  LabelVector out(length, 0.0);
  for (const auto& e : events) {
    if (e.t >= length)
      throw DataError("event index " + std::to_string(e.t) + " outside window of length " +
                      std::to_string(length));
    const double v = static_cast<double>(static_cast<int>(e.kind));
    if (out[e.t] != 0.0 && out[e.t] != v)
      throw DataError("conflicting event kinds at index " + std::to_string(e.t));
    out[e.t] = v;
  }
  return out;
}

std::vector<double> gaussian_kernel(std::size_t kernel_window, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be positive");
  const auto half = static_cast<long>(kernel_window / 2);
  std::vector<double> taps;
  taps.reserve(static_cast<std::size_t>(2 * half + 1));
  for (long j = -half; j <= half; ++j) {
    const double z = static_cast<double>(j) / sigma;
    taps.push_back(std::exp(-0.5 * z * z));
  }
  return taps;
}

LabelVector gaussian_smooth(std::span<const double> labels, std::size_t kernel_window,
                            double sigma) {
  const auto taps = gaussian_kernel(kernel_window, sigma);
  const auto half = static_cast<long>(taps.size() / 2);
  const auto n = static_cast<long>(labels.size());
  LabelVector out(labels.size(), 0.0);
  // Scatter each non-zero label; labels are sparse impulses in practice.
  for (long i = 0; i < n; ++i) {
    const double v = labels[static_cast<std::size_t>(i)];
    if (v == 0.0) continue;
    const long lo = std::max(0L, i - half);
    const long hi = std::min(n - 1, i + half);
    for (long t = lo; t <= hi; ++t)
      out[static_cast<std::size_t>(t)] += v * taps[static_cast<std::size_t>(t - i + half)];
  }
  return out;
}

std::vector<EventLabel> events_in_window(std::span<const EventLabel> run_events, std::size_t start,
                                         std::size_t length) {
  std::vector<EventLabel> out;
  for (const auto& e : run_events)
    if (e.t >= start && e.t < start + length) out.push_back({e.t - start, e.kind});
  return out;
}

}  // namespace strokenet
