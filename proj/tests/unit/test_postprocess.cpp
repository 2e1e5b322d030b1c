#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "strokenet/errors.hpp"
#include "strokenet/label_codec.hpp"
#include "strokenet/postprocess.hpp"
#include "strokenet/rng.hpp"

using namespace strokenet;

namespace {

std::vector<Detection> onsets(const std::vector<std::size_t>& t, const std::vector<double>& s) {
  std::vector<Detection> out;
  for (std::size_t i = 0; i < t.size(); ++i) out.push_back({t[i], EventKind::Onset, s[i]});
  return out;
}

// Exhaustive scan: plateau runs bounded by strictly lower (or higher) neighbours.
std::vector<Detection> scan_oracle(const std::vector<double>& y, double upper, double lower) {
  std::vector<Detection> out;
  const std::size_t n = y.size();
  for (std::size_t a = 1; a + 1 < n; ++a) {
    if (y[a - 1] == y[a]) continue;
    std::size_t b = a;
    while (b + 1 < n && y[b + 1] == y[a]) ++b;
    if (b + 1 >= n) break;
    const std::size_t mid = a + (b - a) / 2;
    if (y[a - 1] < y[a] && y[b + 1] < y[a] && y[a] > 0 && y[a] > upper)
      out.push_back({mid, EventKind::Onset, y[a]});
    if (y[a - 1] > y[a] && y[b + 1] > y[a] && y[a] < 0 && y[a] < lower)
      out.push_back({mid, EventKind::Ending, y[a]});
  }
  return out;
}

}  // namespace

TEST_CASE("Savitzky-Golay reproduces quadratics everywhere") {
  std::vector<double> x(200);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i);
    x[i] = 3 * t * t - 2 * t + 1;
  }
  const auto y = savgol_filter(x, 31, 2);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) <= 1e-9 * std::max(1.0, std::abs(x[i])));

  std::vector<double> scaled(200);
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    const double t = static_cast<double>(i) / 200.0;
    scaled[i] = 3 * t * t - 2 * t + 1;
  }
  for (std::size_t w : {5u, 7u, 31u, 101u}) {
    const auto s = savgol_filter(scaled, w, 2);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s[i] - scaled[i]) <= 1e-9);
  }

  const auto c = savgol_filter(std::vector<double>(50, 4.25), 31, 2);
  for (double v : c) CHECK(std::abs(v - 4.25) <= 1e-12);
}

TEST_CASE("Savitzky-Golay window-5 quadratic coefficients") {
  const auto w = savgol_coefficients(2, 2, 2);
  const std::vector<double> expect{-3.0 / 35, 12.0 / 35, 17.0 / 35, 12.0 / 35, -3.0 / 35};
  REQUIRE(w.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(w[i] - expect[i]) <= 1e-12);

  std::vector<double> impulse(11, 0.0);
  impulse[5] = 1.0;
  const auto y = savgol_filter(impulse, 5, 2);
  CHECK(std::abs(y[5] - 17.0 / 35.0) <= 1e-12);
  CHECK(std::abs(y[4] - 12.0 / 35.0) <= 1e-12);
  CHECK(std::abs(y[3] + 3.0 / 35.0) <= 1e-12);
}

TEST_CASE("Savitzky-Golay argument checks") {
  const std::vector<double> x(40, 1.0);
  CHECK_THROWS_AS(savgol_filter(x, 30, 2), ConfigError);
  CHECK_THROWS_AS(savgol_filter(x, 5, 5), ConfigError);
  CHECK_THROWS_AS(savgol_filter(std::vector<double>(4, 1.0), 5, 2), DataError);
}

TEST_CASE("percentile examples") {
  const std::vector<double> v{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  CHECK(std::abs(*percentile(v, 85) - 0.865) < 1e-12);
  CHECK(*percentile(v, 0) == 0.1);
  CHECK(*percentile(v, 100) == 1.0);
  CHECK(*percentile(std::vector<double>{0.42}, 37) == 0.42);
  CHECK_FALSE(percentile(std::vector<double>{}, 50).has_value());
  const std::vector<double> shuffled{0.9, 0.1, 1.0, 0.5, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6};
  CHECK(std::abs(*percentile(shuffled, 85) - 0.865) < 1e-12);
}

TEST_CASE("a single positive bump yields one onset at its peak") {
  std::vector<double> y(200);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = (static_cast<double>(i) - 120.0) / 15.0;
    y[i] = 0.9 * std::exp(-0.5 * d * d) + 1e-6;
  }
  const auto c = extract_candidates(y, ExtractorConfig{});
  REQUIRE(c.size() == 1);
  CHECK(c[0].t == 120);
  CHECK(c[0].kind == EventKind::Onset);
  CHECK(extract_candidates(std::vector<double>(100, 0.0), ExtractorConfig{}).empty());
}

TEST_CASE("plateau extrema report the midpoint, lower index on ties; edges never qualify") {
  std::vector<double> y(20, 0.001);
  y[5] = y[6] = y[7] = 1.0;  // odd plateau -> 6
  y[12] = y[13] = 1.0;        // even plateau -> 12
  y[0] = 5.0;
  y[19] = 5.0;
  ExtractorConfig cfg;
  cfg.upper_pct = 50.0;
  const auto c = extract_candidates(y, cfg);
  std::vector<std::size_t> on;
  for (const auto& d : c)
    if (d.kind == EventKind::Onset) on.push_back(d.t);
  CHECK(on == std::vector<std::size_t>{6, 12});
}

TEST_CASE("candidates match the exhaustive scan oracle and satisfy the thresholds strictly") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> y(120);
    for (auto& v : y) v = std::round(rng.uniform(-1, 1) * 8.0) / 8.0;  // coarse values create plateaus
    ExtractorConfig cfg;
    const auto th = detection_thresholds(y, cfg);
    const double upper = th.upper ? *th.upper : 1e300;
    const double lower = th.lower ? *th.lower : -1e300;
    const auto got = extract_candidates(y, cfg);
    const auto want = scan_oracle(y, upper, lower);
    CHECK(got == want);
    for (const auto& d : got) {
      if (d.kind == EventKind::Onset) CHECK(d.score > *th.upper);
      else CHECK(d.score < *th.lower);
    }
  }
}

TEST_CASE("two bumps and two dips") {
  std::vector<double> y(400, 0.0);
  const auto bump = [&](double center, double amp) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = (static_cast<double>(i) - center) / 10.0;
      y[i] += amp * std::exp(-0.5 * d * d);
    }
  };
  bump(60, 1.0);
  bump(160, -0.9);
  bump(250, 0.8);
  bump(340, -1.0);
  const auto th = detection_thresholds(y, ExtractorConfig{});
  CHECK(extract_candidates(y, ExtractorConfig{}) == scan_oracle(y, *th.upper, *th.lower));
  const auto d = extract_candidates(y, ExtractorConfig{});
  REQUIRE(d.size() == 4);
  CHECK(d[0].t == 60);
  CHECK(d[1].t == 160);
  CHECK(d[2].t == 250);
  CHECK(d[3].t == 340);
}

TEST_CASE("clustering examples") {
  const auto chain = cluster_detections(onsets({100, 103, 107}, {0.5, 0.9, 0.7}), 5);
  REQUIRE(chain.size() == 1);
  CHECK(chain[0].t == 103);
  CHECK(chain[0].score == 0.9);

  const auto tie = cluster_detections(onsets({200, 204}, {0.8, 0.8}), 5);
  REQUIRE(tie.size() == 1);
  CHECK(tie[0].t == 202);

  const auto half = cluster_detections(onsets({200, 203}, {0.8, 0.8}), 5);
  REQUIRE(half.size() == 1);
  CHECK(half[0].t == 201);  // 201.5 rounds toward the earlier sample

  std::vector<Detection> mixed{{100, EventKind::Onset, 0.5}, {102, EventKind::Ending, -0.5}};
  CHECK(cluster_detections(mixed, 5).size() == 2);

  const auto apart = cluster_detections(onsets({10, 16}, {0.3, 0.4}), 5);
  CHECK(apart.size() == 2);

  std::vector<Detection> endings{{50, EventKind::Ending, -0.2}, {53, EventKind::Ending, -0.7}};
  const auto e = cluster_detections(endings, 5);
  REQUIRE(e.size() == 1);
  CHECK(e[0].t == 53);
}

TEST_CASE("clustering is idempotent and leaves gaps larger than the radius") {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Detection> d;
    std::size_t t = 0;
    const auto n = rng.index(30);
    for (std::size_t i = 0; i < n; ++i) {
      t += rng.index(9);
      const auto kind = rng.uniform() < 0.5 ? EventKind::Onset : EventKind::Ending;
      const double mag = std::round(rng.uniform(0.1, 1.0) * 4.0) / 4.0;
      d.push_back({t, kind, kind == EventKind::Onset ? mag : -mag});
    }
    const std::size_t radius = rng.index(7);
    const auto once = cluster_detections(d, radius);
    CHECK(cluster_detections(once, radius) == once);
    for (auto kind : {EventKind::Onset, EventKind::Ending}) {
      std::vector<std::size_t> ts;
      for (const auto& x : once)
        if (x.kind == kind) ts.push_back(x.t);
      for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] - ts[i - 1] > radius);
    }
    CHECK(std::is_sorted(once.begin(), once.end(), [](const Detection& a, const Detection& b) { return a.t < b.t; }));
  }
}

TEST_CASE("extract_events recovers encoded events") {
  std::vector<EventLabel> events;
  for (std::size_t t = 80; t + 80 < 1000; t += 120) events.push_back({t, EventKind::Onset});
  for (std::size_t t = 140; t + 60 < 1000; t += 120) events.push_back({t, EventKind::Ending});
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  const auto smooth = gaussian_smooth(encode_ternary(events));
  const auto det = extract_events(smooth);
  REQUIRE(det.size() == events.size());
  for (std::size_t i = 0; i < det.size(); ++i) {
    CHECK(det[i].kind == events[i].kind);
    CHECK(std::abs(static_cast<long>(det[i].t) - static_cast<long>(events[i].t)) <= 2);
  }

  Rng rng(99);
  auto noisy = smooth;
  for (auto& v : noisy) v += rng.uniform(-0.05, 0.05);
  CHECK(extract_events(noisy).size() == events.size());

  CHECK(extract_events(std::vector<double>(1000, 0.0)).empty());
}

TEST_CASE("extractor config validation") {
  ExtractorConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.sg_window = 30;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.upper_pct = 100;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.sg_order = 31;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}
