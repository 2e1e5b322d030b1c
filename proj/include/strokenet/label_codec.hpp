#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace strokenet {

enum class EventKind { Onset = 1, Ending = -1 };

std::string to_string(EventKind kind);
EventKind parse_event_kind(const std::string& text);

struct EventLabel {
  std::size_t t = 0;
  EventKind kind = EventKind::Onset;

  friend bool operator==(const EventLabel&, const EventLabel&) = default;
};

using LabelVector = std::vector<double>;

/// +1 at onsets, -1 at endings, 0 elsewhere. Repeating an index with the
/// same kind is harmless; conflicting kinds at one index throw DataError.
LabelVector encode_ternary(std::span<const EventLabel> events, std::size_t length = 1000);

/// Peak-normalized Gaussian taps exp(-j^2 / (2 sigma^2)) for
/// j in [-kernel_window/2, kernel_window/2].
std::vector<double> gaussian_kernel(std::size_t kernel_window, double sigma);

/// Linear convolution with the Gaussian kernel, zero beyond the edges.
/// Overlapping tails add; nothing is clipped.
LabelVector gaussian_smooth(std::span<const double> labels, std::size_t kernel_window = 100,
                            double sigma = 10.0);

/// Window-relative events for [start, start + length) of a run-relative list.
std::vector<EventLabel> events_in_window(std::span<const EventLabel> run_events, std::size_t start,
                                         std::size_t length);

}  // namespace strokenet
