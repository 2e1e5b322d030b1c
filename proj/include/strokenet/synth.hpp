#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strokenet/label_codec.hpp"
#include "strokenet/rng.hpp"
#include "strokenet/signal_core.hpp"

namespace strokenet::synth {

struct SynthConfig {
  int n_athletes = 8;
  int runs_per_athlete = 2;
  double run_duration = 30.0;  // seconds
  double stroke_rate_min = 40.0;  // strokes per minute
  double stroke_rate_max = 120.0;
  double rise_min = 0.2;  // rising fraction of the pulse
  double rise_max = 0.5;
  double duty_min = 0.45;  // pulse width as a fraction of the stroke period
  double duty_max = 0.65;
  double rate_jitter = 0.02;  // relative sigma of per-stroke period
  double amplitude_jitter = 0.05;  // relative sigma of per-stroke amplitude
  double baseline_noise = 0.02;  // absolute sigma, relative to unit amplitude
  double dropout_prob = 0.001;
  std::uint64_t seed = 0;
};

void validate(const SynthConfig& cfg);

/// Drawn once per athlete and shared by all of that athlete's runs.
struct AthleteStyle {
  std::string athlete_id;
  BoatType boat_type = BoatType::Canoe;
  double stroke_rate = 60.0;
  double rise_fraction = 0.3;
  double duty = 0.55;
  double amplitude = 1.0;
};

AthleteStyle draw_style(const SynthConfig& cfg, const std::string& athlete_id, Rng& rng);

struct SynthRun {
  RawRun run;
  std::vector<EventLabel> events;  // run-relative, alternating onset/ending
  AthleteStyle style;
  std::size_t n_pulses = 0;
};

/// Asymmetric raised cosine: rises over rise * width samples, decays over
/// the rest; zero outside [0, width].
double pulse_value(double u, double width, double rise, double amplitude);

/// Sum of per-stroke pulses plus Gaussian baseline noise. Ground-truth onset
/// and ending are the first and last samples where a pulse alone exceeds
/// 5% of its amplitude. Only strokes that end inside the run are emitted.
/// Dropouts are not applied here.
SynthRun generate_run(const SynthConfig& cfg, const AthleteStyle& style, const std::string& run_id,
                      Rng& rng);

/// Marks samples invalid (force zeroed) with probability `prob`; prob must
/// be in [0, 1). At least one sample always stays valid.
RawRun inject_dropouts(const RawRun& run, double prob, Rng& rng);

/// n_athletes * runs_per_athlete runs, deterministic in cfg (seed included).
std::vector<SynthRun> generate_dataset(const SynthConfig& cfg);

}  // namespace strokenet::synth
