#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "strokenet/label_codec.hpp"

namespace strokenet {

struct Detection {
  std::size_t t = 0;
  EventKind kind = EventKind::Onset;
  double score = 0.0;  // filtered model output at t

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct ExtractorConfig {
  std::size_t sg_window = 31;
  int sg_order = 2;
  double upper_pct = 85.0;
  double lower_pct = 15.0;
  std::size_t cluster_radius = 5;
};

void validate(const ExtractorConfig& cfg);

/// Least-squares polynomial smoothing. Interior samples use the symmetric
/// window; near the edges the polynomial is fitted to the truncated
/// neighbourhood [i - half, i + half] clipped to the signal (degree capped
/// at points - 1), so degree <= order polynomials are reproduced
/// everywhere the neighbourhood has at least order + 1 points.
std::vector<double> savgol_filter(std::span<const double> signal, std::size_t window,
                                  int order = 2);

/// Weights w with smoothed[i] = sum_j w[j] * x[i + j - left] for a
/// neighbourhood of `left` samples before and `right` after i.
std::vector<double> savgol_coefficients(std::size_t left, std::size_t right, int order);

/// Linear interpolation between order statistics at rank p/100 * (n - 1).
/// Empty input yields nullopt.
std::optional<double> percentile(std::span<const double> values, double p);

/// Local maxima strictly above the upper threshold become onsets; local
/// minima strictly below the lower threshold become endings. Plateaus
/// report their midpoint (lower index on a half-sample tie); the first and
/// last samples never qualify.
std::vector<Detection> extract_candidates(std::span<const double> filtered,
                                          const ExtractorConfig& cfg);

struct Thresholds {
  std::optional<double> upper, lower;
};
Thresholds detection_thresholds(std::span<const double> filtered, const ExtractorConfig& cfg);

/// Per kind, detections chained at <= radius apart collapse to the one with
/// the largest |score|; a tie at the maximum reports the rounded
/// (half toward earlier) mean time of the tied detections. Output sorted
/// by t.
std::vector<Detection> cluster_detections(std::span<const Detection> detections,
                                          std::size_t radius = 5);

/// savgol_filter -> extract_candidates -> cluster_detections.
std::vector<Detection> extract_events(std::span<const double> raw_output,
                                      const ExtractorConfig& cfg = {});

}  // namespace strokenet
