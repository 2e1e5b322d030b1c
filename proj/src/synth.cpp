#include "strokenet/synth.hpp"

#include <cmath>
#include <cstdio>

#include "strokenet/errors.hpp"

namespace strokenet::synth {

namespace {

constexpr double kEventLevel = 0.05;

std::string padded(int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", width, value);
  return buf;
}

void require_range(double lo, double hi, const char* what) {
  if (!(lo <= hi)) throw ConfigError(std::string(what) + ": min exceeds max");
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.n_athletes <= 0 || cfg.runs_per_athlete <= 0)
    throw ConfigError("synth: athlete and run counts must be positive");
  if (!(cfg.run_duration > 0.0)) throw ConfigError("synth: run_duration must be positive");
  require_range(cfg.stroke_rate_min, cfg.stroke_rate_max, "synth stroke rate");
  require_range(cfg.rise_min, cfg.rise_max, "synth rise fraction");
  require_range(cfg.duty_min, cfg.duty_max, "synth duty");
  if (!(cfg.stroke_rate_min > 0.0)) throw ConfigError("synth: stroke rate must be positive");
  if (!(cfg.rise_min > 0.0 && cfg.rise_max < 1.0))
    throw ConfigError("synth: rise fraction must lie in (0, 1)");
  if (!(cfg.duty_min > 0.0 && cfg.duty_max < 1.0))
    throw ConfigError("synth: duty must lie in (0, 1)");
  if (cfg.rate_jitter < 0.0 || cfg.amplitude_jitter < 0.0 || cfg.baseline_noise < 0.0)
    throw ConfigError("synth: jitter and noise must be non-negative");
  if (!(cfg.dropout_prob >= 0.0 && cfg.dropout_prob < 1.0))
    throw ConfigError("synth: dropout_prob must lie in [0, 1)");
}

AthleteStyle draw_style(const SynthConfig& cfg, const std::string& athlete_id, Rng& rng) {
  AthleteStyle s;
  s.athlete_id = athlete_id;
  s.boat_type = rng.uniform() < 0.5 ? BoatType::Canoe : BoatType::Kayak;
  s.stroke_rate = rng.uniform(cfg.stroke_rate_min, cfg.stroke_rate_max);
  s.rise_fraction = rng.uniform(cfg.rise_min, cfg.rise_max);
  s.duty = rng.uniform(cfg.duty_min, cfg.duty_max);
  s.amplitude = rng.uniform(0.8, 1.2);
  return s;
}

double pulse_value(double u, double width, double rise, double amplitude) {
  if (u <= 0.0 || u >= width) return 0.0;
  const double up = rise * width;
  if (u <= up) return amplitude * 0.5 * (1.0 - std::cos(M_PI * u / up));
  return amplitude * 0.5 * (1.0 + std::cos(M_PI * (u - up) / (width - up)));
}

SynthRun generate_run(const SynthConfig& cfg, const AthleteStyle& style, const std::string& run_id,
                      Rng& rng) {
  validate(cfg);
  const auto n = static_cast<std::size_t>(std::llround(cfg.run_duration * kSampleRateHz));
  SynthRun out;
  out.style = style;
  out.run.run_id = run_id;
  out.run.athlete_id = style.athlete_id;
  out.run.boat_type = style.boat_type;
  out.run.samples.assign(n, Sample{0.0, true});

  const double base_period = 60.0 * kSampleRateHz / style.stroke_rate;
  const double base_width = style.duty * base_period;
  double start = rng.uniform(0.0, base_period - base_width);
  std::vector<double> signal(n, 0.0);
  while (true) {
    const double period =
        base_period * std::max(0.5, 1.0 + cfg.rate_jitter * rng.normal());
    const double width = style.duty * period;
    const double amp = style.amplitude * std::max(0.1, 1.0 + cfg.amplitude_jitter * rng.normal());
    if (start + width >= static_cast<double>(n)) break;

    const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(start)));
    const auto last = std::min(n - 1, static_cast<std::size_t>(std::ceil(start + width)));
    std::size_t onset = n, ending = 0;
    for (std::size_t i = first; i <= last; ++i) {
      const double v = pulse_value(static_cast<double>(i) - start, width, style.rise_fraction, amp);
      signal[i] += v;
      if (v > kEventLevel * amp) {
        if (onset == n) onset = i;
        ending = i;
      }
    }
    if (onset < n) {
      out.events.push_back({onset, EventKind::Onset});
      out.events.push_back({ending, EventKind::Ending});
      ++out.n_pulses;
    }
    start += period;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double noise = cfg.baseline_noise > 0.0 ? cfg.baseline_noise * rng.normal() : 0.0;
    out.run.samples[i].force = signal[i] + noise;
  }
  return out;
}

RawRun inject_dropouts(const RawRun& run, double prob, Rng& rng) {
  if (!(prob >= 0.0 && prob < 1.0))
    throw ConfigError("dropout probability must lie in [0, 1); 1 would invalidate every sample");
  RawRun out = run;
  if (prob == 0.0 || out.samples.empty()) return out;
  std::size_t valid = 0;
  for (auto& s : out.samples) {
    if (rng.uniform() < prob) {
      s = {0.0, false};
    } else if (s.valid) {
      ++valid;
    }
  }
  if (valid == 0) out.samples.front() = run.samples.front().valid ? run.samples.front()
                                                                  : Sample{0.0, true};
  return out;
}

std::vector<SynthRun> generate_dataset(const SynthConfig& cfg) {
  validate(cfg);
  std::vector<SynthRun> out;
  out.reserve(static_cast<std::size_t>(cfg.n_athletes * cfg.runs_per_athlete));
  int run_counter = 0;
  for (int a = 0; a < cfg.n_athletes; ++a) {
    const auto athlete_id = padded(a + 1, 2);
    Rng style_rng(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(a)));
    const auto style = draw_style(cfg, athlete_id, style_rng);
    for (int r = 0; r < cfg.runs_per_athlete; ++r) {
      const auto stream = (static_cast<std::uint64_t>(a) << 20) + static_cast<std::uint64_t>(r);
      Rng rng(mix_seed(cfg.seed, stream + 1'000'000));
      auto run = generate_run(cfg, style, padded(++run_counter, 4), rng);
      run.run = inject_dropouts(run.run, cfg.dropout_prob, rng);
      out.push_back(std::move(run));
    }
  }
  return out;
}

}  // namespace strokenet::synth
