// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "mambagaze/ingest.hpp"
#include "mambagaze/xmd.hpp"

namespace mambagaze::synth {

/// Synthetic eye-tracking cohort. Each window's label shifts its mean pupil
/// diameter by `separation` window-level standard deviations and sets the
/// rate of missingness bursts (blink-like gaps in pupil and gaze channels).
struct SynthSpec {
  std::size_t participants = 6;
  std::size_t windows_per_participant = 40;
  std::size_t steps = 100;
  std::size_t features = ingest::kFeatureCount;
  double separation = 3.5;
  double burst_rate_positive = 1.5;  // expected bursts per window
  double burst_rate_negative = 0.5;
  double sample_rate = 50.0;
  double baseline_seconds = 20.0;
  std::uint64_t seed = 0;

  void validate() const;
  /// No label signal: zero separation and equal burst rates.
  bool is_null() const noexcept;
  xmd::PipelineParams pipeline() const;
  nlohmann::ordered_json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);
};

struct SynthParticipant {
  ingest::RawRecording experiment;
  ingest::RawRecording baseline;
  xmd::LabelTrack labels;
};

struct SynthResult {
  std::vector<xmd::XmdWindow> windows;
  std::vector<xmd::ParticipantResult> participants;
  nlohmann::ordered_json manifest_extra;
};

/// Raw sessions for one participant, deterministic in (spec.seed, index).
SynthParticipant generate_participant(const SynthSpec& spec, std::size_t index);

/// Generates every participant and runs the regular preprocessing pipeline.
SynthResult generate_synthetic(const SynthSpec& spec);

}  // namespace mambagaze::synth
