#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace strokenet {

inline constexpr int kSampleRateHz = 200;
inline constexpr std::size_t kWindowLength = 1000;
inline constexpr std::size_t kWindowStride = 100;

enum class BoatType { Canoe, Kayak };

std::string to_string(BoatType boat);
BoatType parse_boat_type(const std::string& text);

struct Sample {
  double force = 0.0;
  bool valid = true;
};

/// One force channel of one run, sampled at 200 Hz. Invalid samples mark
/// transmission gaps.
struct RawRun {
  std::string run_id;
  std::string athlete_id;
  BoatType boat_type = BoatType::Canoe;
  int sample_rate = kSampleRateHz;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::vector<double> forces() const;
};

/// Throws DataError when the run violates the RawRun invariants.
void validate_run(const RawRun& run);

struct Window {
  std::string run_id;
  std::string athlete_id;
  std::size_t start = 0;
  std::vector<double> values;
};

/// Fills gaps: interior spans by linear interpolation between the nearest
/// valid neighbours, leading/trailing spans by holding the nearest valid
/// value. Valid samples are copied unchanged.
RawRun interpolate_gaps(const RawRun& run);

/// Windows start at 0, stride, 2*stride, ...; the trailing remainder is
/// dropped. Values are the raw (not yet normalized) forces. A run shorter
/// than `length` yields no windows.
std::vector<Window> slide_windows(const RawRun& run, std::size_t length = kWindowLength,
                                  std::size_t stride = kWindowStride);

/// (x - min) / (max - min); a constant input maps to all zeros.
std::vector<double> minmax_normalize(std::span<const double> values);

/// Convenience: interpolate, window, then normalize each window.
std::vector<Window> preprocess_run(const RawRun& run, std::size_t length = kWindowLength,
                                   std::size_t stride = kWindowStride);

// Partition labels are "holdout" or "fold<i>".
struct SplitPlan {
  std::map<std::string, std::string> partitions;  // athlete_id -> label
  std::uint64_t seed = 0;
  int n_folds = 0;

  static std::string fold_label(int fold) { return "fold" + std::to_string(fold); }
  static constexpr const char* kHoldout = "holdout";

  const std::string& partition_of(const std::string& athlete_id) const;
  std::vector<std::string> athletes_in(const std::string& label) const;
};

/// Athletes (not runs) are the split unit. Holdout takes
/// ceil(holdout_fraction * n_athletes) athletes first; the rest are dealt
/// round-robin into `n_folds` folds after a seeded shuffle.
SplitPlan subject_aware_split(std::span<const RawRun> runs, int n_folds, double holdout_fraction,
                              std::uint64_t seed);

}  // namespace strokenet
