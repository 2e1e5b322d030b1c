#include <doctest.h>

#include <set>

#include "strokenet/errors.hpp"
#include "strokenet/synth.hpp"

using namespace strokenet;
using namespace strokenet::synth;

namespace {

SynthConfig quiet() {
  SynthConfig cfg;
  cfg.rate_jitter = 0.0;
  cfg.amplitude_jitter = 0.0;
  cfg.baseline_noise = 0.0;
  cfg.dropout_prob = 0.0;
  return cfg;
}

AthleteStyle fixed_style(double rate = 60.0) {
  AthleteStyle s;
  s.athlete_id = "01";
  s.stroke_rate = rate;
  s.rise_fraction = 0.3;
  s.duty = 0.55;
  s.amplitude = 1.0;
  return s;
}

}  // namespace

TEST_CASE("noise-free 60 spm for 10 s gives ten strokes one period apart") {
  auto cfg = quiet();
  cfg.run_duration = 10.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto run = generate_run(cfg, fixed_style(), "0001", rng);
    CHECK(run.run.size() == 2000);
    REQUIRE(run.n_pulses == 10);
    REQUIRE(run.events.size() == 20);
    for (std::size_t i = 2; i < run.events.size(); i += 2) CHECK(run.events[i].t - run.events[i - 2].t == 200);
  }
}

TEST_CASE("events alternate, bracket the 5% level, and stay inside the run") {
  SynthConfig cfg;
  cfg.baseline_noise = 0.0;
  cfg.amplitude_jitter = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng srng(seed);
    const auto style = draw_style(cfg, "07", srng);
    Rng rng(seed + 100);
    const auto run = generate_run(cfg, style, "0001", rng);
    REQUIRE(run.events.size() % 2 == 0);
    for (std::size_t i = 0; i < run.events.size(); ++i) {
      CHECK(run.events[i].kind == (i % 2 == 0 ? EventKind::Onset : EventKind::Ending));
      CHECK(run.events[i].t < run.run.size());
      if (i > 0) CHECK(run.events[i].t > run.events[i - 1].t);
    }
    for (std::size_t i = 0; i < run.events.size(); i += 2) {
      const auto on = run.events[i].t, off = run.events[i + 1].t;
      for (std::size_t t = on; t <= off; ++t) CHECK(run.run.samples[t].force > 0.05 * style.amplitude);
    }
    for (const auto& s : run.run.samples) CHECK(s.force >= 0.0);
  }
}

TEST_CASE("pulse shape") {
  CHECK(pulse_value(0.0, 100, 0.3, 2.0) == 0.0);
  CHECK(pulse_value(100.0, 100, 0.3, 2.0) == 0.0);
  CHECK(pulse_value(30.0, 100, 0.3, 2.0) == doctest::Approx(2.0));
  CHECK(pulse_value(15.0, 100, 0.3, 2.0) == doctest::Approx(1.0));
  CHECK(pulse_value(65.0, 100, 0.3, 2.0) == doctest::Approx(1.0));
  CHECK(pulse_value(-5.0, 100, 0.3, 2.0) == 0.0);
}

TEST_CASE("generation is deterministic") {
  SynthConfig cfg;
  Rng a(3), b(3);
  const auto style = fixed_style(75);
  const auto r1 = generate_run(cfg, style, "0001", a);
  const auto r2 = generate_run(cfg, style, "0001", b);
  REQUIRE(r1.run.size() == r2.run.size());
  for (std::size_t i = 0; i < r1.run.size(); ++i) CHECK(r1.run.samples[i].force == r2.run.samples[i].force);
  CHECK(r1.events == r2.events);
}

TEST_CASE("no amplitude jitter: equal pulse peaks") {
  auto cfg = quiet();
  cfg.run_duration = 20.0;
  const auto style = fixed_style(40);  // 300-sample period, pulses do not overlap
  Rng rng(5);
  const auto run = generate_run(cfg, style, "0001", rng);
  REQUIRE(run.n_pulses >= 10);
  std::vector<double> peaks;
  for (std::size_t i = 0; i < run.events.size(); i += 2) {
    double peak = 0.0;
    for (std::size_t t = run.events[i].t; t <= run.events[i + 1].t; ++t) peak = std::max(peak, run.run.samples[t].force);
    peaks.push_back(peak);
  }
  for (double p : peaks) CHECK(std::abs(p - peaks[0]) < 1e-3);
}

TEST_CASE("dropouts") {
  SynthConfig cfg = quiet();
  cfg.run_duration = 10.0;
  Rng rng(1);
  const auto run = generate_run(cfg, fixed_style(), "0001", rng).run;

  Rng r0(2);
  const auto same = inject_dropouts(run, 0.0, r0);
  for (std::size_t i = 0; i < run.size(); ++i) CHECK(same.samples[i].force == run.samples[i].force);

  Rng r1(2);
  CHECK_THROWS_AS(inject_dropouts(run, 1.0, r1), ConfigError);

  const auto count_invalid = [](const RawRun& r) {
    std::size_t c = 0;
    for (const auto& s : r.samples) c += s.valid ? 0 : 1;
    return c;
  };
  Rng a(77), b(77);
  const auto da = inject_dropouts(run, 0.01, a);
  const auto db = inject_dropouts(run, 0.01, b);
  CHECK(count_invalid(da) == count_invalid(db));
  CHECK(count_invalid(da) >= 5);
  CHECK(count_invalid(da) <= 40);
  for (const auto& s : da.samples)
    if (!s.valid) CHECK(s.force == 0.0);

  RawRun tiny = run;
  tiny.samples.resize(3);
  Rng c(1);
  const auto t = inject_dropouts(tiny, 0.999999, c);
  CHECK(count_invalid(t) <= 2);
}

TEST_CASE("dataset shape and per-athlete styles") {
  SynthConfig cfg;
  cfg.n_athletes = 6;
  cfg.runs_per_athlete = 2;
  cfg.run_duration = 8.0;
  const auto runs = generate_dataset(cfg);
  REQUIRE(runs.size() == 12);
  std::set<std::string> athletes, ids;
  std::set<double> rates;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    athletes.insert(runs[i].run.athlete_id);
    ids.insert(runs[i].run.run_id);
    rates.insert(runs[i].style.stroke_rate);
    CHECK(runs[i].events.size() == 2 * runs[i].n_pulses);
    if (i % 2 == 1) {
      CHECK(runs[i].style.stroke_rate == runs[i - 1].style.stroke_rate);
      CHECK(runs[i].style.duty == runs[i - 1].style.duty);
      CHECK(runs[i].events != runs[i - 1].events);
    }
  }
  CHECK(athletes.size() == 6);
  CHECK(ids.size() == 12);
  CHECK(rates.size() == 6);

  auto other = cfg;
  other.seed = 1;
  CHECK(generate_dataset(other)[0].events != runs[0].events);
  const auto again = generate_dataset(cfg);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    CHECK(again[i].events == runs[i].events);
    CHECK(again[i].run.forces() == runs[i].run.forces());
  }
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.stroke_rate_min = 130;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.dropout_prob = 1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.n_athletes = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}
