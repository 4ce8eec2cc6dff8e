// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "mambagaze/error.hpp"
#include "json_option.hpp"
#include "mambagaze/rng.hpp"

namespace mambagaze::synth {

using ingest::Feature;
using ingest::index_of;
using ingest::RawRecording;
using ingest::Sample;

namespace {

// Pupil diameters in millimetres; gaze in normalized screen units.
constexpr double kPupilMean = 3.5;
constexpr double kPupilParticipantSd = 0.5;
constexpr double kPupilWindowSd = 0.25;  // the separation unit
constexpr double kPupilSampleSd = 0.05;
constexpr std::size_t kBurstMin = 5;
constexpr std::size_t kBurstMax = 20;

std::uint64_t participant_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t poisson(Rng& rng, double mean) {
  const double limit = std::exp(-mean);
  std::size_t k = 0;
  double prod = rng.uniform();
  while (prod > limit) {
    ++k;
    prod *= rng.uniform();
  }
  return k;
}

struct GazeState {
  double x = 0.5, y = 0.5;
  std::size_t hold = 0;       // samples left in the current fixation
  std::size_t saccade = 0;    // samples left in the current saccade
};

// Appends one timestamp worth of samples; `missing` drops pupil and gaze.
void emit(RawRecording& rec, double t, double pupil, double offset_lr, GazeState& gaze,
          double distance, bool missing, Rng& rng) {
  auto put = [&](Feature f, double v) { rec.samples.push_back(Sample{t, index_of(f), v}); };
  if (gaze.hold == 0 && gaze.saccade == 0) {
    gaze.saccade = 3;
    gaze.hold = 10 + rng.index(30);
  }
  const bool in_saccade = gaze.saccade > 0;
  if (in_saccade) {
    gaze.x = std::clamp(gaze.x + rng.normal(0.0, 0.08), 0.0, 1.0);
    gaze.y = std::clamp(gaze.y + rng.normal(0.0, 0.08), 0.0, 1.0);
    --gaze.saccade;
  } else {
    --gaze.hold;
  }
  if (!missing) {
    put(Feature::pupil_left, pupil + rng.normal(0.0, kPupilSampleSd));
    put(Feature::pupil_right, pupil + offset_lr + rng.normal(0.0, kPupilSampleSd));
    put(Feature::gaze_x, gaze.x + rng.normal(0.0, 0.002));
    put(Feature::gaze_y, gaze.y + rng.normal(0.0, 0.002));
  }
  put(Feature::fixation_flag, (!missing && !in_saccade) ? 1.0 : 0.0);
  put(Feature::saccade_flag, (!missing && in_saccade) ? 1.0 : 0.0);
  put(Feature::blink_flag, missing ? 1.0 : 0.0);
  put(Feature::distance, distance + rng.normal(0.0, 2.0));
}

}  // namespace

void SynthSpec::validate() const {
  require(participants >= 1, ErrorCode::config, "synth.participants must be positive");
  require(windows_per_participant >= 1, ErrorCode::config,
          "synth.windows_per_participant must be positive");
  require(steps >= 2, ErrorCode::config, "synth.steps must be at least 2");
  require(features == ingest::kFeatureCount, ErrorCode::config,
          "synth.features must equal the canonical feature count (" +
              std::to_string(ingest::kFeatureCount) + ")");
  require(std::isfinite(separation) && separation >= 0.0, ErrorCode::config,
          "synth.separation must be >= 0");
  require(burst_rate_positive >= 0.0 && burst_rate_negative >= 0.0 &&
              burst_rate_positive <= 20.0 && burst_rate_negative <= 20.0,
          ErrorCode::config, "synth burst rates must lie in [0, 20]");
  require(sample_rate > 0.0 && std::isfinite(sample_rate), ErrorCode::config,
          "synth.sample_rate must be positive");
  require(baseline_seconds * sample_rate >= 10.0, ErrorCode::config,
          "synth.baseline_seconds must cover at least 10 samples");
}

bool SynthSpec::is_null() const noexcept {
  return separation == 0.0 && burst_rate_positive == burst_rate_negative;
}

xmd::PipelineParams SynthSpec::pipeline() const {
  xmd::PipelineParams p;
  p.sample_rate = sample_rate;
  p.window_seconds = static_cast<double>(steps) / sample_rate;
  p.label_interval = p.window_seconds;
  return p;
}

nlohmann::ordered_json SynthSpec::to_json() const {
  nlohmann::ordered_json j;
  j["participants"] = participants;
  j["windows_per_participant"] = windows_per_participant;
  j["steps"] = steps;
  j["features"] = features;
  j["separation"] = separation;
  j["burst_rate_positive"] = burst_rate_positive;
  j["burst_rate_negative"] = burst_rate_negative;
  j["sample_rate"] = sample_rate;
  j["baseline_seconds"] = baseline_seconds;
  j["seed"] = seed;
  return j;
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::config, "synth config must be a JSON object");
  static const std::array<const char*, 10> known = {
      "participants", "windows_per_participant", "steps", "features", "separation",
      "burst_rate_positive", "burst_rate_negative", "sample_rate", "baseline_seconds", "seed"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    require(ok, ErrorCode::config, "unknown synth option '" + key + "'");
  }
  SynthSpec s;
  try {
    s.participants = detail::option(j, "participants", s.participants);
    s.windows_per_participant = detail::option(j, "windows_per_participant", s.windows_per_participant);
    s.steps = detail::option(j, "steps", s.steps);
    s.features = detail::option(j, "features", s.features);
    s.separation = detail::option(j, "separation", s.separation);
    s.burst_rate_positive = detail::option(j, "burst_rate_positive", s.burst_rate_positive);
    s.burst_rate_negative = detail::option(j, "burst_rate_negative", s.burst_rate_negative);
    s.sample_rate = detail::option(j, "sample_rate", s.sample_rate);
    s.baseline_seconds = detail::option(j, "baseline_seconds", s.baseline_seconds);
    s.seed = detail::option(j, "seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("synth config: ") + e.what());
  }
  s.validate();
  return s;
}

SynthParticipant generate_participant(const SynthSpec& spec, std::size_t index) {
  spec.validate();
  Rng rng(participant_seed(spec.seed, index));
  char id[16];
  std::snprintf(id, sizeof id, "P%03zu", index + 1);

  const double pupil_base = kPupilMean + rng.normal(0.0, kPupilParticipantSd);
  const double offset_lr = rng.normal(0.0, 0.1);
  const double distance = 600.0 + rng.normal(0.0, 40.0);
  const double rate = spec.sample_rate;

  SynthParticipant out;
  out.experiment.participant_id = out.baseline.participant_id = id;
  out.experiment.session = ingest::SessionKind::experiment;
  out.baseline.session = ingest::SessionKind::baseline;

  GazeState gaze;
  const auto baseline_steps = static_cast<std::size_t>(std::llround(spec.baseline_seconds * rate));
  for (std::size_t k = 0; k < baseline_steps; ++k)
    emit(out.baseline, static_cast<double>(k) / rate, pupil_base + rng.normal(0.0, kPupilWindowSd),
         offset_lr, gaze, distance, false, rng);

  out.labels.interval_seconds = static_cast<double>(spec.steps) / rate;
  out.labels.threshold = 5;
  gaze = GazeState{};
  std::vector<bool> missing(spec.steps);
  for (std::size_t w = 0; w < spec.windows_per_participant; ++w) {
    const int label = rng.bernoulli(0.5) ? 1 : 0;
    out.labels.ratings.push_back(label == 1 ? 5 + static_cast<int>(rng.index(5))
                                            : 1 + static_cast<int>(rng.index(4)));
    const double window_pupil = pupil_base + rng.normal(0.0, kPupilWindowSd) +
                                (label == 1 ? spec.separation * kPupilWindowSd : 0.0);
    std::fill(missing.begin(), missing.end(), false);
    const std::size_t bursts =
        poisson(rng, label == 1 ? spec.burst_rate_positive : spec.burst_rate_negative);
    for (std::size_t b = 0; b < bursts; ++b) {
      const std::size_t len = kBurstMin + rng.index(kBurstMax - kBurstMin + 1);
      const std::size_t start = rng.index(spec.steps);
      for (std::size_t k = start; k < std::min(spec.steps, start + len); ++k) missing[k] = true;
    }
    for (std::size_t k = 0; k < spec.steps; ++k) {
      const double t = static_cast<double>(w * spec.steps + k) / rate;
      emit(out.experiment, t, window_pupil, offset_lr, gaze, distance, missing[k], rng);
    }
  }
  return out;
}

SynthResult generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  SynthResult out;
  const auto params = spec.pipeline();
  out.manifest_extra["source"] = "synthetic";
  out.manifest_extra["null_dataset"] = spec.is_null();
  out.manifest_extra["synth"] = spec.to_json();
  out.manifest_extra["pipeline"] = params.to_json();
  auto& provenance = out.manifest_extra["provenance"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < spec.participants; ++i) {
    auto p = generate_participant(spec, i);
    auto result = xmd::process_participant(std::move(p.experiment), std::move(p.baseline),
                                           p.labels, params);
    provenance.push_back(result.provenance.to_json());
    out.windows.insert(out.windows.end(), result.windows.begin(), result.windows.end());
    out.participants.push_back(std::move(result));
  }
  return out;
}

}  // namespace mambagaze::synth
