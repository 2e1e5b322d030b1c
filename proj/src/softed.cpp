#include "strokenet/softed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "strokenet/errors.hpp"

namespace strokenet::softed {

double membership(double t_event, double t_detection, double k) {
  if (!(k > 0.0)) throw ConfigError("tolerance k must be positive");
  return std::max(0.0, 1.0 - std::abs(t_detection - t_event) / k);
}

long Assignment::total_credit() const {
  long s = 0;
  for (const auto& p : pairs) s += p.credit;
  return s;
}

namespace {

struct Candidate {
  std::size_t event, detection;
  long credit;
  long dt;
};

// Greedy preference: higher credit, smaller |dt|, earlier event, earlier detection.
bool preferred(const Candidate& a, const Candidate& b) {
  if (a.credit != b.credit) return a.credit > b.credit;
  if (a.dt != b.dt) return a.dt < b.dt;
  if (a.event != b.event) return a.event < b.event;
  return a.detection < b.detection;
}

std::vector<Candidate> candidates(std::span<const EventLabel> events,
                                  std::span<const Detection> detections, std::size_t k) {
  if (k == 0) throw ConfigError("tolerance k must be positive");
  std::vector<Candidate> out;
  for (std::size_t j = 0; j < events.size(); ++j)
    for (std::size_t i = 0; i < detections.size(); ++i) {
      if (events[j].kind != detections[i].kind) continue;
      const long c = credit(events[j].t, detections[i].t, k);
      if (c > 0) out.push_back({j, i, c, static_cast<long>(k) - c});
    }
  std::sort(out.begin(), out.end(), preferred);
  return out;
}

// Maximum-weight bipartite matching by the Hungarian method on a
// rows x cols weight matrix (missing edges weigh 0).
long max_weight(const std::vector<std::vector<long>>& weight) {
  if (weight.empty() || weight.front().empty()) return 0;
  std::vector<std::vector<long>> a = weight;
  if (a.size() > a.front().size()) {
    std::vector<std::vector<long>> t(a.front().size(), std::vector<long>(a.size()));
    for (std::size_t r = 0; r < a.size(); ++r)
      for (std::size_t c = 0; c < a[r].size(); ++c) t[c][r] = a[r][c];
    a = std::move(t);
  }
  const std::size_t n = a.size(), m = a.front().size();
  constexpr long inf = std::numeric_limits<long>::max() / 4;
  std::vector<long> u(n + 1, 0), v(m + 1, 0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      long delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const long cur = -a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  long total = 0;
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) total += a[p[j] - 1][j - 1];
  return total;
}

// Optimum over the candidates whose endpoints are both still free.
long optimum(const std::vector<Candidate>& cands, const std::vector<char>& event_free,
             const std::vector<char>& det_free) {
  std::vector<std::size_t> rows, cols;
  std::vector<long> row_of(event_free.size(), -1), col_of(det_free.size(), -1);
  for (const auto& c : cands) {
    if (!event_free[c.event] || !det_free[c.detection]) continue;
    if (row_of[c.event] < 0) {
      row_of[c.event] = static_cast<long>(rows.size());
      rows.push_back(c.event);
    }
    if (col_of[c.detection] < 0) {
      col_of[c.detection] = static_cast<long>(cols.size());
      cols.push_back(c.detection);
    }
  }
  if (rows.empty()) return 0;
  std::vector<std::vector<long>> w(rows.size(), std::vector<long>(cols.size(), 0));
  for (const auto& c : cands) {
    if (!event_free[c.event] || !det_free[c.detection]) continue;
    w[static_cast<std::size_t>(row_of[c.event])][static_cast<std::size_t>(col_of[c.detection])] =
        c.credit;
  }
  return max_weight(w);
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

Assignment finish(std::span<const EventLabel> events, std::span<const Detection> detections,
                  std::size_t k, const std::vector<Candidate>& cands,
                  std::vector<MatchedPair> pairs) {
  Assignment out;
  out.event_candidates.resize(events.size());
  out.detection_candidates.resize(detections.size());
  for (const auto& c : cands) {
    out.event_candidates[c.event].push_back(c.detection);
    out.detection_candidates[c.detection].push_back(c.event);
  }
  for (auto& list : out.event_candidates) std::sort(list.begin(), list.end());
  for (auto& list : out.detection_candidates) std::sort(list.begin(), list.end());

  std::sort(pairs.begin(), pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return a.event != b.event ? a.event < b.event : a.detection < b.detection;
  });
  std::vector<char> e_used(events.size(), 0), d_used(detections.size(), 0);
  for (auto& p : pairs) {
    p.mu = static_cast<double>(p.credit) / static_cast<double>(k);
    e_used[p.event] = 1;
    d_used[p.detection] = 1;
  }
  out.pairs = std::move(pairs);
  for (std::size_t j = 0; j < events.size(); ++j)
    if (!e_used[j]) out.unmatched_events.push_back(j);
  for (std::size_t i = 0; i < detections.size(); ++i)
    if (!d_used[i]) out.unmatched_detections.push_back(i);
  return out;
}

}  // namespace

Assignment associate_greedy(std::span<const EventLabel> events,
                            std::span<const Detection> detections, std::size_t k) {
  const auto cands = candidates(events, detections, k);
  std::vector<char> e_free(events.size(), 1), d_free(detections.size(), 1);
  std::vector<MatchedPair> pairs;
  for (const auto& c : cands) {
    if (!e_free[c.event] || !d_free[c.detection]) continue;
    e_free[c.event] = d_free[c.detection] = 0;
    pairs.push_back({c.event, c.detection, c.credit, 0.0});
  }
  return finish(events, detections, k, cands, std::move(pairs));
}

Assignment associate(std::span<const EventLabel> events, std::span<const Detection> detections,
                     std::size_t k) {
  const auto cands = candidates(events, detections, k);

  // Connected components of the candidate graph are solved independently.
  const std::size_t ne = events.size();
  std::vector<std::size_t> parent(ne + detections.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (const auto& c : cands) {
    const auto a = find_root(parent, c.event);
    const auto b = find_root(parent, ne + c.detection);
    if (a != b) parent[a] = b;
  }
  std::vector<std::vector<Candidate>> components(parent.size());
  for (const auto& c : cands) components[find_root(parent, c.event)].push_back(c);

  std::vector<MatchedPair> pairs;
  std::vector<char> e_free(ne, 1), d_free(detections.size(), 1);
  for (const auto& comp : components) {
    if (comp.empty()) continue;
    // Greedy first; it is usually already optimal.
    std::vector<MatchedPair> greedy;
    long greedy_total = 0;
    {
      std::vector<char> ef = e_free, df = d_free;
      for (const auto& c : comp) {
        if (!ef[c.event] || !df[c.detection]) continue;
        ef[c.event] = df[c.detection] = 0;
        greedy.push_back({c.event, c.detection, c.credit, 0.0});
        greedy_total += c.credit;
      }
    }
    long target = optimum(comp, e_free, d_free);
    if (greedy_total == target) {
      for (const auto& p : greedy) pairs.push_back(p);
      continue;
    }
    // Take pairs in greedy order only while an optimal completion remains.
    for (const auto& c : comp) {
      if (target == 0) break;
      if (!e_free[c.event] || !d_free[c.detection]) continue;
      e_free[c.event] = d_free[c.detection] = 0;
      if (optimum(comp, e_free, d_free) + c.credit == target) {
        pairs.push_back({c.event, c.detection, c.credit, 0.0});
        target -= c.credit;
      } else {
        e_free[c.event] = d_free[c.detection] = 1;
      }
    }
  }
  return finish(events, detections, k, cands, std::move(pairs));
}

long max_credit_bruteforce(std::span<const EventLabel> events,
                           std::span<const Detection> detections, std::size_t k) {
  std::vector<char> used(detections.size(), 0);
  const auto recurse = [&](auto&& self, std::size_t j) -> long {
    if (j == events.size()) return 0;
    long best = self(self, j + 1);  // event j unmatched
    for (std::size_t i = 0; i < detections.size(); ++i) {
      if (used[i] || detections[i].kind != events[j].kind) continue;
      const long c = credit(events[j].t, detections[i].t, k);
      if (c == 0) continue;
      used[i] = 1;
      best = std::max(best, c + self(self, j + 1));
      used[i] = 0;
    }
    return best;
  };
  return recurse(recurse, 0);
}

ValidRange valid_range(std::size_t n_time, std::size_t h) {
  if (2 * h >= n_time)
    throw ConfigError("margin h=" + std::to_string(h) + " leaves no valid range in a window of " +
                      std::to_string(n_time) + " samples");
  return {h, n_time - h};
}

Restricted restrict_to_range(std::span<const EventLabel> events,
                             std::span<const Detection> detections, const Assignment& assignment,
                             const ValidRange& range) {
  Restricted out;
  for (std::size_t j = 0; j < events.size(); ++j) {
    if (!range.contains(events[j].t)) continue;
    const auto& cands = assignment.event_candidates.at(j);
    if (std::all_of(cands.begin(), cands.end(),
                    [&](std::size_t i) { return range.contains(detections[i].t); }))
      out.events.push_back(events[j]);
  }
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (!range.contains(detections[i].t)) continue;
    const auto& cands = assignment.detection_candidates.at(i);
    if (std::all_of(cands.begin(), cands.end(),
                    [&](std::size_t j) { return range.contains(events[j].t); }))
      out.detections.push_back(detections[i]);
  }
  return out;
}

SoftConfusion& SoftConfusion::operator+=(const SoftConfusion& o) {
  if (k != 0 && o.k != 0 && k != o.k) throw ConfigError("cannot add confusions with different k");
  if (k == 0) k = o.k;
  tp_credit += o.tp_credit;
  n_events += o.n_events;
  n_detections += o.n_detections;
  n_time += o.n_time;
  tn += o.tn;
  if (k == 0) return *this;
  // tp/fp/fn are re-derived from integer credit so sums stay exact.
  const double kd = static_cast<double>(k);
  tp = static_cast<double>(tp_credit) / kd;
  fn = static_cast<double>(static_cast<long>(n_events * k) - tp_credit) / kd;
  fp = static_cast<double>(static_cast<long>(n_detections * k) - tp_credit) / kd;
  return *this;
}

SoftConfusion confusion_from(const Assignment& assignment, std::size_t n_events,
                             std::size_t n_detections, std::size_t n_time, std::size_t k) {
  SoftConfusion c;
  c.k = k;
  c.n_events = n_events;
  c.n_detections = n_detections;
  c.n_time = n_time;
  c.tp_credit = assignment.total_credit();
  const double kd = static_cast<double>(k);
  c.tp = static_cast<double>(c.tp_credit) / kd;
  c.fn = static_cast<double>(static_cast<long>(n_events * k) - c.tp_credit) / kd;
  c.fp = static_cast<double>(static_cast<long>(n_detections * k) - c.tp_credit) / kd;
  c.tn = std::max(0.0, static_cast<double>(n_time) - static_cast<double>(n_events) - c.fp);
  return c;
}

SoftConfusion soft_confusion(std::span<const EventLabel> events,
                             std::span<const Detection> detections, std::size_t n_time,
                             std::size_t k) {
  return confusion_from(associate(events, detections, k), events.size(), detections.size(),
                        n_time, k);
}

Metrics soft_metrics(const SoftConfusion& c) {
  Metrics m;
  if (c.tp + c.fp > 0.0) m.precision = c.tp / (c.tp + c.fp);
  if (c.tp + c.fn > 0.0) m.recall = c.tp / (c.tp + c.fn);
  if (m.precision && m.recall) {
    const double s = *m.precision + *m.recall;
    m.f1 = s > 0.0 ? 2.0 * *m.precision * *m.recall / s : 0.0;
  }
  return m;
}

void ScoreHistogram::add(double mu) {
  const double scaled = std::clamp(mu, 0.0, 1.0) * static_cast<double>(k);
  const auto j = std::min(k, static_cast<std::size_t>(std::floor(scaled + 1e-9)));
  ++counts[j];
}

std::size_t ScoreHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

double ScoreHistogram::bucket_low(std::size_t j) const {
  return static_cast<double>(j) / static_cast<double>(k);
}

double ScoreHistogram::bucket_high(std::size_t j) const {
  return j == k ? 1.0 : static_cast<double>(j + 1) / static_cast<double>(k);
}

std::string ScoreHistogram::to_csv() const {
  std::string out = "bucket_low,bucket_high,count\n";
  char line[96];
  for (std::size_t j = 0; j <= k; ++j) {
    std::snprintf(line, sizeof line, "%.6f,%.6f,%zu\n", bucket_low(j), bucket_high(j), counts[j]);
    out += line;
  }
  return out;
}

namespace {

void check_window_lengths(std::span<const WindowInput> windows) {
  for (const auto& w : windows)
    if (w.n_time != windows.front().n_time)
      throw DataError("windows of unequal length in one evaluation");
}

void collect(WindowedReport& report, const Assignment& a, const SoftConfusion& c) {
  report.confusion += c;
  for (const auto& p : a.pairs) report.histogram.add(p.mu);
  for (std::size_t u = 0; u < a.unmatched_events.size() + a.unmatched_detections.size(); ++u)
    report.histogram.add(0.0);
  report.matched_pairs += a.pairs.size();
  report.unmatched += a.unmatched_events.size() + a.unmatched_detections.size();
  ++report.n_windows;
}

}  // namespace

WindowedReport evaluate_windowed(std::span<const WindowInput> windows,
                                 const WindowEvalConfig& cfg) {
  if (cfg.k == 0) throw ConfigError("tolerance k must be positive");
  check_window_lengths(windows);
  WindowedReport report{{}, {}, ScoreHistogram(cfg.k), 0, 0, 0};
  report.confusion.k = cfg.k;
  for (const auto& w : windows) {
    const auto range = valid_range(w.n_time, cfg.h);
    const auto full = associate(w.events, w.detections, cfg.k);
    const auto kept = restrict_to_range(w.events, w.detections, full, range);
    const auto scored = associate(kept.events, kept.detections, cfg.k);
    collect(report, scored,
            confusion_from(scored, kept.events.size(), kept.detections.size(), range.size(),
                           cfg.k));
  }
  report.metrics = soft_metrics(report.confusion);
  return report;
}

WindowedReport evaluate_unrestricted(std::span<const WindowInput> windows, std::size_t k) {
  if (k == 0) throw ConfigError("tolerance k must be positive");
  check_window_lengths(windows);
  WindowedReport report{{}, {}, ScoreHistogram(k), 0, 0, 0};
  report.confusion.k = k;
  for (const auto& w : windows) {
    const auto a = associate(w.events, w.detections, k);
    collect(report, a, confusion_from(a, w.events.size(), w.detections.size(), w.n_time, k));
  }
  report.metrics = soft_metrics(report.confusion);
  return report;
}

std::string metrics_json(const WindowedReport& report, const WindowEvalConfig& cfg) {
  nlohmann::ordered_json doc;
  const auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  doc["precision"] = opt(report.metrics.precision);
  doc["recall"] = opt(report.metrics.recall);
  doc["f1"] = opt(report.metrics.f1);
  doc["tp_s"] = report.confusion.tp;
  doc["fp_s"] = report.confusion.fp;
  doc["fn_s"] = report.confusion.fn;
  doc["tn_s"] = report.confusion.tn;
  doc["n_windows"] = report.n_windows;
  doc["k"] = cfg.k;
  doc["h"] = cfg.h;
  return doc.dump(2) + "\n";
}

}  // namespace strokenet::softed
