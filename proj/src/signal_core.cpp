#include "strokenet/signal_core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "strokenet/errors.hpp"
#include "strokenet/rng.hpp"

namespace strokenet {

std::string to_string(BoatType boat) { return boat == BoatType::Canoe ? "canoe" : "kayak"; }

BoatType parse_boat_type(const std::string& text) {
  if (text == "canoe") return BoatType::Canoe;
  if (text == "kayak") return BoatType::Kayak;
  throw DataError("unknown boat type '" + text + "'");
}

std::vector<double> RawRun::forces() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.force);
  return out;
}

void validate_run(const RawRun& run) {
  if (run.sample_rate != kSampleRateHz)
    throw DataError("run " + run.run_id + ": sample rate must be 200 Hz, got " +
                    std::to_string(run.sample_rate));
  if (run.samples.empty()) throw DataError("run " + run.run_id + ": no samples");
  const bool any_valid =
      std::any_of(run.samples.begin(), run.samples.end(), [](const Sample& s) { return s.valid; });
  if (!any_valid) throw DataError("run " + run.run_id + ": no valid samples");
}

RawRun interpolate_gaps(const RawRun& run) {
  validate_run(run);
  RawRun out = run;
  auto& s = out.samples;
  const std::size_t n = s.size();

  std::size_t first_valid = 0;
  while (!s[first_valid].valid) ++first_valid;
  for (std::size_t i = 0; i < first_valid; ++i) s[i] = {s[first_valid].force, true};

  std::size_t prev = first_valid;
  for (std::size_t i = first_valid + 1; i < n; ++i) {
    if (!s[i].valid) continue;
    if (i > prev + 1) {
      const double a = s[prev].force;
      const double b = s[i].force;
      const double span = static_cast<double>(i - prev);
      for (std::size_t j = prev + 1; j < i; ++j)
        s[j] = {a + (b - a) * static_cast<double>(j - prev) / span, true};
    }
    prev = i;
  }
  for (std::size_t i = prev + 1; i < n; ++i) s[i] = {s[prev].force, true};
  return out;
}

std::vector<Window> slide_windows(const RawRun& run, std::size_t length, std::size_t stride) {
  if (length == 0 || stride == 0) throw ConfigError("window length and stride must be positive");
  std::vector<Window> out;
  const std::size_t n = run.size();
  if (n < length) return out;
  out.reserve((n - length) / stride + 1);
  for (std::size_t start = 0; start + length <= n; start += stride) {
    Window w{run.run_id, run.athlete_id, start, {}};
    w.values.reserve(length);
    for (std::size_t i = start; i < start + length; ++i) w.values.push_back(run.samples[i].force);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<double> minmax_normalize(std::span<const double> values) {
  if (values.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<double> out(values.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / range;
  }
  return out;
}

std::vector<Window> preprocess_run(const RawRun& run, std::size_t length, std::size_t stride) {
  auto windows = slide_windows(interpolate_gaps(run), length, stride);
  for (auto& w : windows) w.values = minmax_normalize(w.values);
  return windows;
}

const std::string& SplitPlan::partition_of(const std::string& athlete_id) const {
  auto it = partitions.find(athlete_id);
  if (it == partitions.end()) throw DataError("athlete '" + athlete_id + "' not in split plan");
  return it->second;
}

std::vector<std::string> SplitPlan::athletes_in(const std::string& label) const {
  std::vector<std::string> out;
  for (const auto& [athlete, part] : partitions)
    if (part == label) out.push_back(athlete);
  return out;
}

SplitPlan subject_aware_split(std::span<const RawRun> runs, int n_folds, double holdout_fraction,
                              std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
    throw ConfigError("holdout_fraction must be in [0, 1)");

  std::set<std::string> unique;
  for (const auto& r : runs) unique.insert(r.athlete_id);
  std::vector<std::string> athletes(unique.begin(), unique.end());
  const auto n = athletes.size();
  if (n < static_cast<std::size_t>(n_folds) + 1)
    throw DataError("subject-aware split needs at least " + std::to_string(n_folds + 1) +
                    " athletes, got " + std::to_string(n));

  auto n_holdout =
      static_cast<std::size_t>(std::ceil(holdout_fraction * static_cast<double>(n) - 1e-9));
  if (n - n_holdout < static_cast<std::size_t>(n_folds))
    throw DataError("holdout leaves fewer athletes than folds");

  Rng rng(seed);
  rng.shuffle(athletes.begin(), athletes.end());

  SplitPlan plan;
  plan.seed = seed;
  plan.n_folds = n_folds;
  for (std::size_t i = 0; i < n; ++i) {
    plan.partitions[athletes[i]] =
        i < n_holdout ? std::string(SplitPlan::kHoldout)
                      : SplitPlan::fold_label(static_cast<int>((i - n_holdout) % n_folds));
  }
  return plan;
}

}  // namespace strokenet
