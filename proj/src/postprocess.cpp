#include "strokenet/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "strokenet/errors.hpp"

namespace strokenet {

void validate(const ExtractorConfig& cfg) {
  if (cfg.sg_window % 2 == 0) throw ConfigError("sg_window must be odd");
  if (cfg.sg_order < 0 || static_cast<std::size_t>(cfg.sg_order) >= cfg.sg_window)
    throw ConfigError("sg_order must be in [0, sg_window)");
  if (!(cfg.upper_pct > 0.0 && cfg.upper_pct < 100.0) ||
      !(cfg.lower_pct > 0.0 && cfg.lower_pct < 100.0))
    throw ConfigError("percentiles must lie in (0, 100)");
}

std::vector<double> savgol_coefficients(std::size_t left, std::size_t right, int order) {
  const auto points = static_cast<Eigen::Index>(left + right + 1);
  const Eigen::Index degree = std::min<Eigen::Index>(order, points - 1);
  Eigen::MatrixXd A(points, degree + 1);
  for (Eigen::Index r = 0; r < points; ++r) {
    const double x = static_cast<double>(r) - static_cast<double>(left);
    double p = 1.0;
    for (Eigen::Index c = 0; c <= degree; ++c) {
      A(r, c) = p;
      p *= x;
    }
  }
  // Value of the fitted polynomial at offset 0 is the constant term, i.e.
  // the first row of pinv(A).
  const Eigen::MatrixXd pinv = A.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(points, points));
  std::vector<double> w(static_cast<std::size_t>(points));
  for (Eigen::Index r = 0; r < points; ++r) w[static_cast<std::size_t>(r)] = pinv(0, r);
  return w;
}

std::vector<double> savgol_filter(std::span<const double> signal, std::size_t window, int order) {
  if (window % 2 == 0) throw ConfigError("Savitzky-Golay window must be odd");
  if (order < 0 || static_cast<std::size_t>(order) >= window)
    throw ConfigError("Savitzky-Golay order must be in [0, window)");
  if (signal.size() < window)
    throw DataError("signal of length " + std::to_string(signal.size()) +
                    " is shorter than the Savitzky-Golay window " + std::to_string(window));
  const std::size_t n = signal.size();
  const std::size_t half = window / 2;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cache;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t left = std::min(half, i);
    const std::size_t right = std::min(half, n - 1 - i);
    auto it = cache.find({left, right});
    if (it == cache.end())
      it = cache.emplace(std::make_pair(left, right), savgol_coefficients(left, right, order)).first;
    const auto& w = it->second;
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * signal[i - left + j];
    out[i] = acc;
  }
  return out;
}

std::optional<double> percentile(std::span<const double> values, double p) {
  if (values.empty()) return std::nullopt;
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("percentile must be in [0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Thresholds detection_thresholds(std::span<const double> filtered, const ExtractorConfig& cfg) {
  std::vector<double> pos, neg;
  for (double v : filtered) {
    if (v > 0.0) pos.push_back(v);
    if (v < 0.0) neg.push_back(v);
  }
  return {percentile(pos, cfg.upper_pct), percentile(neg, cfg.lower_pct)};
}

std::vector<Detection> extract_candidates(std::span<const double> filtered,
                                          const ExtractorConfig& cfg) {
  std::vector<Detection> out;
  const std::size_t n = filtered.size();
  if (n < 3) return out;
  const auto [upper, lower] = detection_thresholds(filtered, cfg);

  // Walk plateaus (maximal runs of equal values) that have both neighbours.
  std::size_t i = 1;
  while (i + 1 < n) {
    std::size_t j = i;
    while (j + 1 < n && filtered[j + 1] == filtered[i]) ++j;
    if (j + 1 >= n) break;  // plateau touches the last sample
    const double v = filtered[i];
    const double before = filtered[i - 1];
    const double after = filtered[j + 1];
    const std::size_t mid = i + (j - i) / 2;
    if (v > before && v > after && upper && v > *upper)
      out.push_back({mid, EventKind::Onset, v});
    else if (v < before && v < after && lower && v < *lower)
      out.push_back({mid, EventKind::Ending, v});
    i = j + 1;
  }
  return out;
}

namespace {

std::vector<Detection> cluster_kind(std::vector<Detection> dets, std::size_t radius) {
  std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.t < b.t; });
  std::vector<Detection> out;
  std::size_t g0 = 0;
  while (g0 < dets.size()) {
    std::size_t g1 = g0 + 1;
    while (g1 < dets.size() && dets[g1].t - dets[g1 - 1].t <= radius) ++g1;

    double best = 0.0;
    for (std::size_t k = g0; k < g1; ++k) best = std::max(best, std::abs(dets[k].score));
    std::size_t tied = 0, t_sum = 0;
    const Detection* first_best = nullptr;
    for (std::size_t k = g0; k < g1; ++k) {
      if (std::abs(dets[k].score) != best) continue;
      if (first_best == nullptr) first_best = &dets[k];
      ++tied;
      t_sum += dets[k].t;
    }
    Detection rep = *first_best;
    // Rounded mean, halves toward the earlier sample.
    rep.t = (2 * t_sum + tied - 1) / (2 * tied);
    out.push_back(rep);
    g0 = g1;
  }
  return out;
}

}  // namespace

std::vector<Detection> cluster_detections(std::span<const Detection> detections,
                                          std::size_t radius) {
  std::vector<Detection> onsets, endings;
  for (const auto& d : detections) (d.kind == EventKind::Onset ? onsets : endings).push_back(d);
  auto out = cluster_kind(std::move(onsets), radius);
  auto e = cluster_kind(std::move(endings), radius);
  out.insert(out.end(), e.begin(), e.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const Detection& a, const Detection& b) { return a.t < b.t; });
  return out;
}

std::vector<Detection> extract_events(std::span<const double> raw_output,
                                      const ExtractorConfig& cfg) {
  validate(cfg);
  const auto filtered = savgol_filter(raw_output, cfg.sg_window, cfg.sg_order);
  const auto candidates = extract_candidates(filtered, cfg);
  return cluster_detections(candidates, cfg.cluster_radius);
}

}  // namespace strokenet

