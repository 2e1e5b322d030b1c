#include <doctest.h>

#include <algorithm>
#include <set>

#include "strokenet/errors.hpp"
#include "strokenet/rng.hpp"
#include "strokenet/signal_core.hpp"

using namespace strokenet;

namespace {

constexpr double kNaN = -12345.0;  // marks an invalid sample in run_of()

RawRun run_of(const std::vector<double>& forces, std::string athlete = "01", std::string id = "0001") {
  RawRun run;
  run.run_id = std::move(id);
  run.athlete_id = std::move(athlete);
  for (double f : forces) run.samples.push_back({f == kNaN ? 0.0 : f, f != kNaN});
  return run;
}

RawRun ramp(std::size_t n) {
  RawRun run;
  run.run_id = "0001";
  run.athlete_id = "01";
  for (std::size_t i = 0; i < n; ++i) run.samples.push_back({static_cast<double>(i), true});
  return run;
}

}  // namespace

TEST_CASE("interpolate_gaps fills interior spans linearly and holds at the edges") {
  CHECK(interpolate_gaps(run_of({1, kNaN, 3})).forces() == std::vector<double>{1, 2, 3});
  CHECK(interpolate_gaps(run_of({kNaN, kNaN, 5, 7})).forces() == std::vector<double>{5, 5, 5, 7});
  CHECK(interpolate_gaps(run_of({0, kNaN, kNaN, kNaN, 4})).forces() ==
        std::vector<double>{0, 1, 2, 3, 4});
  CHECK(interpolate_gaps(run_of({2, 8, kNaN, kNaN})).forces() == std::vector<double>{2, 8, 8, 8});

  const auto filled = interpolate_gaps(run_of({kNaN, 1, kNaN}));
  for (const auto& s : filled.samples) CHECK(s.valid);
}

TEST_CASE("interpolate_gaps rejects a run without valid samples") {
  CHECK_THROWS_AS(interpolate_gaps(run_of({kNaN, kNaN})), DataError);
  CHECK_THROWS_AS(interpolate_gaps(run_of({})), DataError);
}

TEST_CASE("interpolation keeps valid samples bit-exact") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> f(200);
    for (auto& v : f) v = rng.uniform() < 0.2 ? kNaN : rng.normal();
    f[rng.index(f.size())] = 0.123456789;
    const auto in = run_of(f);
    const auto out = interpolate_gaps(in);
    REQUIRE(out.size() == in.size());
    for (std::size_t i = 0; i < in.size(); ++i)
      if (in.samples[i].valid) CHECK(out.samples[i].force == in.samples[i].force);
  }
}

TEST_CASE("validate_run enforces the sample rate and a valid sample") {
  auto run = run_of({1, 2});
  CHECK_NOTHROW(validate_run(run));
  run.sample_rate = 100;
  CHECK_THROWS_AS(validate_run(run), DataError);
  CHECK_THROWS_AS(validate_run(run_of({kNaN})), DataError);
}

TEST_CASE("slide_windows counts and starts") {
  const auto w = slide_windows(ramp(1900), 1000, 100);
  REQUIRE(w.size() == 10);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i].start == 100 * i);
  CHECK(slide_windows(ramp(1000)).size() == 1);
  CHECK(slide_windows(ramp(1000))[0].start == 0);
  CHECK(slide_windows(ramp(999)).empty());
  CHECK(slide_windows(ramp(1999)).size() == 10);
}

TEST_CASE("each window is the verbatim run slice") {
  const auto run = ramp(2345);
  for (const auto& w : slide_windows(run)) {
    REQUIRE(w.values.size() == 1000);
    for (std::size_t i = 0; i < w.values.size(); ++i) CHECK(w.values[i] == run.samples[w.start + i].force);
    CHECK(w.run_id == run.run_id);
    CHECK(w.athlete_id == run.athlete_id);
  }
}

TEST_CASE("minmax_normalize examples") {
  CHECK(minmax_normalize(std::vector<double>{2, 4, 6}) == std::vector<double>{0, 0.5, 1});
  CHECK(minmax_normalize(std::vector<double>{5, 5, 5}) == std::vector<double>{0, 0, 0});
  CHECK(minmax_normalize(std::vector<double>{-1, 0, 1}) == std::vector<double>{0, 0.5, 1});
}

TEST_CASE("minmax_normalize is idempotent and spans [0, 1]") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(1 + rng.index(300));
    for (auto& v : x) v = rng.normal(5.0, 3.0);
    const auto once = minmax_normalize(x);
    const auto twice = minmax_normalize(once);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(once[i] - twice[i]) <= 1e-12);
    if (x.size() > 1) {
      CHECK(*std::min_element(once.begin(), once.end()) == 0.0);
      CHECK(*std::max_element(once.begin(), once.end()) == 1.0);
    }
  }
}

TEST_CASE("preprocess_run windows are normalized") {
  auto run = ramp(1500);
  run.samples[10].valid = false;
  for (const auto& w : preprocess_run(run)) {
    CHECK(*std::min_element(w.values.begin(), w.values.end()) == 0.0);
    CHECK(*std::max_element(w.values.begin(), w.values.end()) == 1.0);
  }
}

TEST_CASE("subject_aware_split: six athletes, five folds, one held out") {
  std::vector<RawRun> runs;
  for (int a = 1; a <= 6; ++a) runs.push_back(run_of({1, 2}, "0" + std::to_string(a)));
  const auto plan = subject_aware_split(runs, 5, 1.0 / 6.0, 42);
  CHECK(plan.athletes_in(SplitPlan::kHoldout).size() == 1);
  for (int f = 0; f < 5; ++f) CHECK(plan.athletes_in(SplitPlan::fold_label(f)).size() == 1);
  CHECK(plan.partitions.size() == 6);
}

TEST_CASE("subject_aware_split is deterministic and subject-aware") {
  std::vector<RawRun> runs;
  for (int a = 0; a < 9; ++a)
    for (int r = 0; r < 3; ++r)
      runs.push_back(run_of({1, 2}, "ath" + std::to_string(a), std::to_string(a * 10 + r)));
  const auto p1 = subject_aware_split(runs, 5, 0.2, 11);
  const auto p2 = subject_aware_split(runs, 5, 0.2, 11);
  CHECK(p1.partitions == p2.partitions);
  CHECK(p1.athletes_in(SplitPlan::kHoldout).size() == 2);  // ceil(0.2 * 9)

  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& label : {"holdout", "fold0", "fold1", "fold2", "fold3", "fold4"}) {
    const auto members = p1.athletes_in(label);
    total += members.size();
    seen.insert(members.begin(), members.end());
  }
  CHECK(total == 9);
  CHECK(seen.size() == 9);

  bool differs = false;
  for (std::uint64_t seed = 0; seed < 20 && !differs; ++seed)
    differs = subject_aware_split(runs, 5, 0.2, seed).partitions != p1.partitions;
  CHECK(differs);
}

TEST_CASE("subject_aware_split rejects too few athletes and bad arguments") {
  std::vector<RawRun> runs;
  for (int a = 0; a < 5; ++a) runs.push_back(run_of({1}, std::to_string(a)));
  CHECK_THROWS_AS(subject_aware_split(runs, 5, 0.2, 0), DataError);
  CHECK_THROWS_AS(subject_aware_split(runs, 1, 0.2, 0), ConfigError);
  CHECK_THROWS_AS(subject_aware_split(runs, 2, 1.0, 0), ConfigError);
  CHECK_NOTHROW(subject_aware_split(runs, 4, 0.2, 0));
}

TEST_CASE("boat type round trip") {
  CHECK(parse_boat_type(to_string(BoatType::Kayak)) == BoatType::Kayak);
  CHECK(parse_boat_type("canoe") == BoatType::Canoe);
  CHECK_THROWS(parse_boat_type("raft"));
}
