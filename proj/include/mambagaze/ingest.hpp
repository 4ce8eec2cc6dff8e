// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mambagaze::ingest {

/// Canonical feature order; defines the column order of every tensor.
enum class Feature : std::size_t {
  pupil_left,
  pupil_right,
  gaze_x,
  gaze_y,
  gaze_velocity,
  gaze_acceleration,
  fixation_flag,
  saccade_flag,
  blink_flag,
  distance,
};

inline constexpr std::size_t kFeatureCount = 10;

inline constexpr std::size_t index_of(Feature f) noexcept { return static_cast<std::size_t>(f); }

const std::array<std::string_view, kFeatureCount>& feature_names() noexcept;
std::optional<std::size_t> feature_index(std::string_view name) noexcept;
/// Indicator channels (fixation, saccade, blink).
bool is_binary_feature(std::size_t feature) noexcept;

enum class SessionKind { experiment, baseline };

struct Sample {
  double timestamp = 0;  // seconds
  std::size_t channel = 0;
  double value = 0;

  bool operator==(const Sample&) const = default;
};

struct RawRecording {
  std::string participant_id;
  SessionKind session = SessionKind::experiment;
  std::vector<Sample> samples;

  bool empty() const noexcept { return samples.empty(); }
  /// Number of samples on one channel.
  std::size_t count(std::size_t channel) const noexcept;
};

enum class SchemaProfile { clare, cldrive, generic };

const char* profile_name(SchemaProfile profile) noexcept;
SchemaProfile parse_profile(std::string_view name);

/// Column mapping of one dataset schema onto the canonical features.
struct ProfileMapping {
  SchemaProfile profile;
  std::string time_column;
  double time_scale = 1.0;  // multiply to obtain seconds
  std::array<std::string, kFeatureCount> columns;
  std::array<bool, kFeatureCount> required{};
};

const ProfileMapping& profile_mapping(SchemaProfile profile);

/// JSON text describing every profile's column mapping (the sidecar file).
std::string profiles_sidecar_json();

/// Parses one CSV session. Cells that are empty, non-numeric or non-finite
/// produce no sample for that (timestamp, channel).
RawRecording parse_recording(std::istream& in, SchemaProfile profile,
                             std::string participant_id, SessionKind session,
                             const std::string& source_name = "<stream>");
RawRecording parse_recording(const std::filesystem::path& path, SchemaProfile profile,
                             std::string participant_id, SessionKind session);

/// Keeps at most one sample per (timestamp, channel): the last valid one in
/// input order. Output is sorted by (timestamp, channel).
RawRecording coalesce_timestamps(RawRecording rec);

/// Writes the recording as a generic-profile CSV (one row per timestamp).
void write_generic_csv(const RawRecording& rec, std::ostream& out);

struct FeatureBaseline {
  double mean = 0.0;
  double stddev = 1.0;
  std::size_t observations = 0;
  std::size_t kept = 0;  // values surviving the percentile filter
  bool fallback = false;
  std::string note;
};

struct BaselineStats {
  std::array<FeatureBaseline, kFeatureCount> features;

  double mean(std::size_t f) const { return features[f].mean; }
  double stddev(std::size_t f) const { return features[f].stddev; }
};

/// Minimum observations for percentile filtering of a continuous feature.
inline constexpr std::size_t kMinBaselineObservations = 10;

/// Linear-interpolation percentile of sorted values, q in [0, 1].
double percentile_sorted(const std::vector<double>& sorted, double q);
double median_sorted(const std::vector<double>& sorted);

/// Robust per-feature baseline: values inside [Q10, Q90] give mean = median,
/// stddev = population standard deviation. Indicator channels use (0, 1).
BaselineStats baseline_stats(const RawRecording& rec);

}  // namespace mambagaze::ingest
