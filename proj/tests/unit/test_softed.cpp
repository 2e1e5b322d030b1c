#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "strokenet/errors.hpp"
#include "strokenet/rng.hpp"
#include "strokenet/softed.hpp"

using namespace strokenet;
using namespace strokenet::softed;

namespace {

std::vector<EventLabel> ev(const std::vector<std::size_t>& t, EventKind k = EventKind::Onset) {
  std::vector<EventLabel> out;
  for (auto x : t) out.push_back({x, k});
  return out;
}

std::vector<Detection> det(const std::vector<std::size_t>& t, EventKind k = EventKind::Onset) {
  std::vector<Detection> out;
  for (auto x : t) out.push_back({x, k, k == EventKind::Onset ? 1.0 : -1.0});
  return out;
}

struct Instance {
  std::vector<EventLabel> events;
  std::vector<Detection> detections;
  std::size_t n_time;
};

Instance random_instance(Rng& rng, std::size_t n_time, std::size_t max_each) {
  Instance in{{}, {}, n_time};
  std::set<std::pair<std::size_t, int>> used_e, used_d;
  const auto ne = rng.index(max_each + 1), nd = rng.index(max_each + 1);
  for (std::size_t i = 0; i < ne; ++i) {
    const auto t = rng.index(n_time);
    const auto k = rng.uniform() < 0.5 ? EventKind::Onset : EventKind::Ending;
    if (used_e.insert({t, static_cast<int>(k)}).second) in.events.push_back({t, k});
  }
  for (std::size_t i = 0; i < nd; ++i) {
    const auto t = rng.index(n_time);
    const auto k = rng.uniform() < 0.5 ? EventKind::Onset : EventKind::Ending;
    if (used_d.insert({t, static_cast<int>(k)}).second) in.detections.push_back({t, k, 0.5});
  }
  std::sort(in.events.begin(), in.events.end(), [](auto& a, auto& b) { return a.t < b.t; });
  std::sort(in.detections.begin(), in.detections.end(), [](auto& a, auto& b) { return a.t < b.t; });
  return in;
}

}  // namespace

TEST_CASE("membership examples") {
  CHECK(membership(100, 100, 15) == 1.0);
  CHECK(std::abs(membership(100, 101, 15) - 14.0 / 15.0) < 1e-15);
  CHECK(membership(100, 116, 15) == 0.0);
  CHECK(membership(100, 115, 15) == 0.0);
  CHECK(std::abs(membership(100, 98, 15) - 13.0 / 15.0) < 1e-15);
  CHECK_THROWS_AS(membership(0, 0, 0), ConfigError);
}

TEST_CASE("association examples") {
  const auto a = associate(ev({100}), det({101}), 15);
  REQUIRE(a.pairs.size() == 1);
  CHECK(std::abs(a.pairs[0].mu - 14.0 / 15.0) < 1e-15);

  const auto b = associate(ev({100}), det({99, 101}), 15);
  REQUIRE(b.pairs.size() == 1);
  CHECK(b.pairs[0].detection == 0);  // t = 99, earlier detection wins the tie
  CHECK(b.unmatched_detections == std::vector<std::size_t>{1});

  const auto c = associate({}, det({500}), 15);
  CHECK(c.pairs.empty());
  CHECK(c.unmatched_detections.size() == 1);

  const auto kinds = associate(ev({100}, EventKind::Onset), det({100}, EventKind::Ending), 15);
  CHECK(kinds.pairs.empty());
  CHECK(kinds.event_candidates[0].empty());
}

TEST_CASE("candidate sets hold every same-kind partner with positive membership") {
  const auto a = associate(ev({100, 120}), det({90, 110, 140}), 15);
  CHECK(a.event_candidates[0] == std::vector<std::size_t>{0, 1});
  CHECK(a.event_candidates[1] == std::vector<std::size_t>{1});
  CHECK(a.detection_candidates[1] == std::vector<std::size_t>{0, 1});
  CHECK(a.detection_candidates[2].empty());
}

TEST_CASE("the matcher is optimal where plain greedy is not") {
  const auto e = ev({0, 8});
  const auto d = det({7, 16});
  CHECK(associate_greedy(e, d, 15).total_credit() == 14);
  CHECK(associate(e, d, 15).total_credit() == 15);
  CHECK(max_credit_bruteforce(e, d, 15) == 15);
}

TEST_CASE("optimal matching agrees with brute force on random instances") {
  Rng rng(31);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto in = random_instance(rng, 80, 6);
    const std::size_t k = 1 + rng.index(20);
    const auto a = associate(in.events, in.detections, k);
    CHECK(a.total_credit() == max_credit_bruteforce(in.events, in.detections, k));
    std::set<std::size_t> es, ds;
    for (const auto& p : a.pairs) {
      CHECK(es.insert(p.event).second);
      CHECK(ds.insert(p.detection).second);
      CHECK(p.mu > 0.0);
      CHECK(in.events[p.event].kind == in.detections[p.detection].kind);
    }
    CHECK(a.pairs.size() + a.unmatched_events.size() == in.events.size());
    CHECK(a.pairs.size() + a.unmatched_detections.size() == in.detections.size());
  }
}

TEST_CASE("valid range") {
  const auto r = valid_range(1000, 15);
  CHECK(r.size() == 970);
  CHECK(r.begin == 15);
  CHECK(r.end == 985);
  CHECK(r.contains(984));
  CHECK_FALSE(r.contains(985));
  CHECK_FALSE(r.contains(14));
  CHECK(valid_range(1000, 0).size() == 1000);
  CHECK_THROWS_AS(valid_range(30, 15), ConfigError);
  CHECK_NOTHROW(valid_range(31, 15));
}

TEST_CASE("restriction examples") {
  const auto range = valid_range(1000, 15);
  {
    const auto e = ev({10});
    const auto d = det({20});
    const auto r = restrict_to_range(e, d, associate(e, d, 15), range);
    CHECK(r.events.empty());
    CHECK(r.detections.empty());
  }
  {
    const auto e = ev({500});
    const auto d = det({503});
    const auto r = restrict_to_range(e, d, associate(e, d, 15), range);
    CHECK(r.events.size() == 1);
    CHECK(r.detections.size() == 1);
  }
  {
    const auto e = ev({984});
    const auto d = det({990});
    const auto r = restrict_to_range(e, d, associate(e, d, 15), range);
    CHECK(r.events.empty());
    CHECK(r.detections.empty());
  }
  {
    // An unmatched candidate in the margin still excludes the event; the
    // valid detection whose only candidate is that event is kept.
    const auto e = ev({20});
    const auto d = det({6, 21});
    const auto r = restrict_to_range(e, d, associate(e, d, 15), range);
    CHECK(r.events.empty());
    REQUIRE(r.detections.size() == 1);
    CHECK(r.detections[0].t == 21);
  }
}

TEST_CASE("soft confusion examples") {
  const auto c = soft_confusion(ev({100, 300}), det({101, 500}), 1000, 15);
  CHECK(std::abs(c.tp - 14.0 / 15.0) < 1e-12);
  CHECK(std::abs(c.fp - 16.0 / 15.0) < 1e-12);
  CHECK(std::abs(c.fn - 16.0 / 15.0) < 1e-12);
  CHECK(std::abs(c.tn - (1000.0 - 2.0 - 16.0 / 15.0)) < 1e-9);
  const auto m = soft_metrics(c);
  CHECK(std::abs(*m.precision - 7.0 / 15.0) < 1e-12);
  CHECK(std::abs(*m.recall - 7.0 / 15.0) < 1e-12);
  CHECK(std::abs(*m.f1 - 7.0 / 15.0) < 1e-12);

  const auto perfect = soft_confusion(ev({10, 50, 90}), det({10, 50, 90}), 100, 15);
  CHECK(perfect.tp == 3.0);
  CHECK(perfect.fp == 0.0);
  CHECK(perfect.fn == 0.0);
  const auto pm = soft_metrics(perfect);
  CHECK(*pm.precision == 1.0);
  CHECK(*pm.recall == 1.0);
  CHECK(*pm.f1 == 1.0);

  const auto none = soft_confusion(ev({10, 50}), {}, 100, 15);
  CHECK(none.tp == 0.0);
  CHECK(none.fn == 2.0);
  CHECK(none.fp == 0.0);
  const auto nm = soft_metrics(none);
  CHECK_FALSE(nm.precision.has_value());
  CHECK(*nm.recall == 0.0);
  CHECK_FALSE(nm.f1.has_value());

  const auto miss = soft_metrics(soft_confusion(ev({10}), det({80}), 100, 15));
  CHECK(*miss.precision == 0.0);
  CHECK(*miss.recall == 0.0);
  CHECK(*miss.f1 == 0.0);

  const auto empty = soft_metrics(soft_confusion({}, {}, 100, 15));
  CHECK_FALSE(empty.precision.has_value());
  CHECK_FALSE(empty.recall.has_value());
}

TEST_CASE("TN is floored at zero") {
  auto e = ev({0, 1, 2, 3});
  auto on = ev({0, 1, 2, 3}, EventKind::Ending);
  e.insert(e.end(), on.begin(), on.end());
  auto d = det({4, 5, 6, 7});
  auto dn = det({4, 5, 6, 7}, EventKind::Ending);
  d.insert(d.end(), dn.begin(), dn.end());
  const auto c = soft_confusion(e, d, 8, 1);
  CHECK(c.fp == 8.0);
  CHECK(c.tn == 0.0);
}

TEST_CASE("conservation and symmetry on random instances") {
  Rng rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_instance(rng, 200, 10);
    const auto c = soft_confusion(in.events, in.detections, in.n_time, 15);
    CHECK(c.tp + c.fn == doctest::Approx(static_cast<double>(in.events.size())).epsilon(1e-12));
    CHECK(c.tp + c.fp == doctest::Approx(static_cast<double>(in.detections.size())).epsilon(1e-12));
    CHECK(c.tp <= static_cast<double>(std::min(in.events.size(), in.detections.size())) + 1e-12);

    std::vector<EventLabel> as_events;
    std::vector<Detection> as_dets;
    for (const auto& d : in.detections) as_events.push_back({d.t, d.kind});
    for (const auto& e : in.events) as_dets.push_back({e.t, e.kind, 0.5});
    const auto m = soft_metrics(c);
    const auto s = soft_metrics(soft_confusion(as_events, as_dets, in.n_time, 15));
    CHECK(m.precision.has_value() == s.recall.has_value());
    if (m.precision && s.recall) CHECK(std::abs(*m.precision - *s.recall) < 1e-12);
    if (m.recall && s.precision) CHECK(std::abs(*m.recall - *s.precision) < 1e-12);
  }
}

TEST_CASE("moving a detection away from every event never increases TP") {
  Rng rng(43);
  for (int trial = 0; trial < 1000; ++trial) {
    auto in = random_instance(rng, 120, 5);
    if (in.detections.empty()) continue;
    const auto i = rng.index(in.detections.size());
    auto moved = in.detections;
    const bool right = rng.uniform() < 0.5;
    if (!right && moved[i].t == 0) continue;
    moved[i].t = right ? moved[i].t + 1 : moved[i].t - 1;
    bool away = true;
    for (const auto& e : in.events) {
      const auto before = std::abs(static_cast<long>(in.detections[i].t) - static_cast<long>(e.t));
      const auto after = std::abs(static_cast<long>(moved[i].t) - static_cast<long>(e.t));
      if (after < before) away = false;
    }
    if (!away) continue;
    std::sort(moved.begin(), moved.end(), [](auto& a, auto& b) { return a.t < b.t; });
    CHECK(soft_confusion(in.events, moved, 200, 15).tp <= soft_confusion(in.events, in.detections, 200, 15).tp + 1e-12);
  }
}

TEST_CASE("histogram buckets") {
  ScoreHistogram h(15);
  REQUIRE(h.counts.size() == 16);
  h.add(1.0);
  h.add(14.0 / 15.0);
  h.add(13.0 / 15.0);
  h.add(0.0);
  CHECK(h.counts[15] == 1);
  CHECK(h.counts[14] == 1);
  CHECK(h.counts[13] == 1);
  CHECK(h.counts[0] == 1);
  CHECK(h.total() == 4);
  CHECK(h.bucket_low(14) == doctest::Approx(14.0 / 15.0));
  CHECK(h.bucket_high(14) == doctest::Approx(1.0));
  const auto csv = h.to_csv();
  CHECK(csv.rfind("bucket_low,bucket_high,count\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
}

TEST_CASE("windowed evaluation: interior window equals plain scoring") {
  WindowInput w{ev({200, 400, 600}), det({201, 430, 598}), 1000};
  const auto r = evaluate_windowed(std::vector<WindowInput>{w}, WindowEvalConfig{15, 15});
  const auto plain = soft_confusion(w.events, w.detections, 970, 15);
  CHECK(r.confusion.tp == plain.tp);
  CHECK(r.confusion.fp == plain.fp);
  CHECK(r.confusion.fn == plain.fn);
  CHECK(r.confusion.tn == plain.tn);
  CHECK(r.n_windows == 1);
}

TEST_CASE("windowed evaluation with h = 0 is plain SoftED") {
  Rng rng(47);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng, 100, 6);
    const WindowInput w{in.events, in.detections, 100};
    const auto r = evaluate_windowed(std::vector<WindowInput>{w}, WindowEvalConfig{15, 0});
    const auto plain = soft_confusion(in.events, in.detections, 100, 15);
    CHECK(r.confusion.tp == plain.tp);
    CHECK(r.confusion.fp == plain.fp);
    CHECK(r.confusion.fn == plain.fn);
    CHECK(r.confusion.tn == plain.tn);
  }
}

TEST_CASE("windowed evaluation: histogram holds matched and unmatched entities") {
  const std::vector<WindowInput> ws = {{ev({200, 400}), det({201, 402, 700}), 1000},
                                       {ev({300, 800}), det({300}), 1000}};
  const auto r = evaluate_windowed(ws, WindowEvalConfig{15, 15});
  CHECK(r.matched_pairs == 3);
  CHECK(r.unmatched == 2);
  CHECK(r.histogram.total() == r.matched_pairs + r.unmatched);
  CHECK(r.histogram.counts[15] == 1);
  CHECK(r.histogram.counts[14] == 1);
  CHECK(r.histogram.counts[13] == 1);
  CHECK(r.histogram.counts[0] == 2);
  CHECK(std::abs(r.confusion.tp - (1.0 + 14.0 / 15 + 13.0 / 15)) < 1e-12);
  CHECK(r.confusion.tp_credit == 42);
}

TEST_CASE("windowed evaluation rejects inconsistent input") {
  const std::vector<WindowInput> ws = {{{}, {}, 1000}, {{}, {}, 900}};
  CHECK_THROWS_AS(evaluate_windowed(ws, WindowEvalConfig{}), DataError);
  CHECK_THROWS_AS(evaluate_windowed(std::vector<WindowInput>{{{}, {}, 30}}, WindowEvalConfig{15, 15}), ConfigError);
}

TEST_CASE("metrics json") {
  const std::vector<WindowInput> ws = {{ev({200}), det({201}), 1000}};
  const auto r = evaluate_windowed(ws, WindowEvalConfig{});
  const auto j = metrics_json(r, WindowEvalConfig{});
  for (const char* key : {"\"precision\"", "\"recall\"", "\"f1\"", "\"tp_s\"", "\"fp_s\"", "\"fn_s\"",
                          "\"tn_s\"", "\"n_windows\"", "\"k\"", "\"h\""})
    CHECK(j.find(key) != std::string::npos);
  const auto empty = metrics_json(evaluate_windowed(std::vector<WindowInput>{{{}, {}, 1000}}, WindowEvalConfig{}),
                                  WindowEvalConfig{});
  CHECK(empty.find("\"precision\": null") != std::string::npos);
}
