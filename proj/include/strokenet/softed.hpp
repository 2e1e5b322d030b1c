#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strokenet/label_codec.hpp"
#include "strokenet/postprocess.hpp"

namespace strokenet::softed {

/// Triangular membership max(0, 1 - |t_d - t_e| / k).
double membership(double t_event, double t_detection, double k);

// Integer credit k - |dt| of a same-kind pair; membership is credit / k.
inline long credit(std::size_t t_event, std::size_t t_detection, std::size_t k) {
  const long dt = static_cast<long>(t_event) - static_cast<long>(t_detection);
  const long c = static_cast<long>(k) - (dt < 0 ? -dt : dt);
  return c > 0 ? c : 0;
}

struct MatchedPair {
  std::size_t event = 0;      // index into the event list
  std::size_t detection = 0;  // index into the detection list
  long credit = 0;
  double mu = 0.0;
};

struct Assignment {
  std::vector<MatchedPair> pairs;
  std::vector<std::size_t> unmatched_events;
  std::vector<std::size_t> unmatched_detections;
  // D_{e_j}: same-kind detections with positive membership for event j.
  std::vector<std::vector<std::size_t>> event_candidates;
  // E_{d_i}: same-kind events with positive membership for detection i.
  std::vector<std::vector<std::size_t>> detection_candidates;

  long total_credit() const;
};

/// One-to-one same-kind matching that maximizes the summed membership.
/// Among optimal matchings the one preferred by the greedy order wins:
/// higher membership, then smaller |dt|, then earlier event, then earlier
/// detection.
Assignment associate(std::span<const EventLabel> events, std::span<const Detection> detections,
                     std::size_t k);

/// Plain greedy matching in the order above, without the optimality
/// repair. Kept for comparison; it is not optimal in general.
Assignment associate_greedy(std::span<const EventLabel> events,
                            std::span<const Detection> detections, std::size_t k);

/// Brute-force maximum total credit over all one-to-one same-kind matchings.
long max_credit_bruteforce(std::span<const EventLabel> events,
                           std::span<const Detection> detections, std::size_t k);

/// 0-based valid indices [begin, end) = [h, n_time - h).
struct ValidRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool contains(std::size_t t) const { return t >= begin && t < end; }
  std::size_t size() const { return end - begin; }
};

/// Throws ConfigError when 2h >= n_time.
ValidRange valid_range(std::size_t n_time, std::size_t h);

struct Restricted {
  std::vector<EventLabel> events;
  std::vector<Detection> detections;
};

/// Keeps events inside the range whose candidate detections all lie inside
/// it, and detections inside the range whose candidate events all lie
/// inside it. `assignment` must come from the unrestricted sets.
Restricted restrict_to_range(std::span<const EventLabel> events,
                             std::span<const Detection> detections, const Assignment& assignment,
                             const ValidRange& range);

struct SoftConfusion {
  double tp = 0.0, fp = 0.0, fn = 0.0, tn = 0.0;
  std::size_t n_events = 0, n_detections = 0, n_time = 0;
  // Exact bookkeeping: tp == tp_credit / k.
  long tp_credit = 0;
  std::size_t k = 0;

  SoftConfusion& operator+=(const SoftConfusion& other);
};

/// Associates E and D, then TP = sum of matched memberships,
/// FN = |E| - TP, FP = |D| - TP, TN = max(0, n_time - |E| - FP).
SoftConfusion soft_confusion(std::span<const EventLabel> events,
                             std::span<const Detection> detections, std::size_t n_time,
                             std::size_t k);
SoftConfusion confusion_from(const Assignment& assignment, std::size_t n_events,
                             std::size_t n_detections, std::size_t n_time, std::size_t k);

/// Undefined metrics (zero denominators) are nullopt.
struct Metrics {
  std::optional<double> precision, recall, f1;
};

Metrics soft_metrics(const SoftConfusion& c);

/// Buckets [j/k, (j+1)/k) for j < k plus a final bucket holding exact 1.0.
struct ScoreHistogram {
  std::size_t k = 15;
  std::vector<std::size_t> counts;

  explicit ScoreHistogram(std::size_t k_ = 15) : k(k_), counts(k_ + 1, 0) {}
  void add(double mu);
  std::size_t total() const;
  double bucket_low(std::size_t j) const;
  double bucket_high(std::size_t j) const;
  std::string to_csv() const;
};

struct WindowEvalConfig {
  std::size_t k = 15;
  std::size_t h = 15;
};

struct WindowInput {
  std::vector<EventLabel> events;
  std::vector<Detection> detections;
  std::size_t n_time = 1000;
};

struct WindowedReport {
  SoftConfusion confusion;  // micro-aggregated
  Metrics metrics;
  ScoreHistogram histogram;
  std::size_t n_windows = 0;
  std::size_t matched_pairs = 0;
  std::size_t unmatched = 0;
};

/// Per window: associate on the full window, restrict to the valid range,
/// score the restricted sets on |t| - 2h time values. Confusions are summed
/// across windows before computing metrics.
WindowedReport evaluate_windowed(std::span<const WindowInput> windows,
                                 const WindowEvalConfig& cfg);

/// Same aggregation without any margin restriction.
WindowedReport evaluate_unrestricted(std::span<const WindowInput> windows, std::size_t k);

std::string metrics_json(const WindowedReport& report, const WindowEvalConfig& cfg);

}  // namespace strokenet::softed
