// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mambagaze/ingest.hpp"

/// Values/masks/deltas encoding of irregular recordings on a uniform grid.
namespace mambagaze::xmd {

using ingest::kFeatureCount;

/// How observation masks are derived from source samples.
enum class MaskMode {
  change,   // a sample sets the mask only when its value differs from the previous one
  arrival,  // any sample sets the mask
};

const char* mask_mode_name(MaskMode mode) noexcept;
MaskMode parse_mask_mode(const std::string& name);

struct PipelineParams {
  double sample_rate = 50.0;
  double window_seconds = 10.0;
  double label_interval = 10.0;
  int binarize_threshold = 5;
  double norm_eps = 1e-8;
  MaskMode mask_mode = MaskMode::change;

  std::size_t window_steps() const;
  nlohmann::ordered_json to_json() const;
  static PipelineParams from_json(const nlohmann::json& j);
};

/// One participant's session on a uniform grid; row-major [steps x F].
struct GridSeries {
  std::string participant_id;
  double sample_rate = 50.0;
  double start_time = 0.0;
  std::size_t steps = 0;
  std::size_t features = kFeatureCount;
  std::vector<double> values;   // NaN marks an absent cell before imputation
  std::vector<std::uint8_t> masks;
  std::vector<double> deltas;

  double& value(std::size_t t, std::size_t f) { return values[t * features + f]; }
  double value(std::size_t t, std::size_t f) const { return values[t * features + f]; }
  std::uint8_t mask(std::size_t t, std::size_t f) const { return masks[t * features + f]; }
  double delta(std::size_t t, std::size_t f) const { return deltas[t * features + f]; }
};

/// Grid cell k (time start + k/rate) takes the latest sample at or before it,
/// or NaN before the first sample of that channel.
GridSeries resample_to_grid(const ingest::RawRecording& rec, double rate);

/// Grid index whose interval ((k-1)/rate, k/rate] contains `seconds_since_start`.
std::size_t grid_index(double seconds_since_start, double rate);

/// Masks from source timestamps (never from resampled values).
std::vector<std::uint8_t> compute_masks(const ingest::RawRecording& rec, const GridSeries& grid,
                                        MaskMode mode = MaskMode::change);

struct DeltaTracks {
  std::vector<double> deltas;
  std::vector<double> log_deltas;
};

/// delta = 0 where observed, otherwise previous + 1/rate; an unobserved first
/// step starts at 1/rate.
DeltaTracks compute_deltas(std::span<const std::uint8_t> masks, std::size_t steps,
                           std::size_t features, double rate);

/// Observed cells keep their value, gaps carry the previous value, and
/// leading gaps take the baseline mean. Requires grid.masks.
GridSeries impute_values(GridSeries grid, const ingest::BaselineStats& base);

/// (x - mean) / (stddev + eps) per feature; masks and deltas untouched.
GridSeries normalize(GridSeries grid, const ingest::BaselineStats& base, double eps = 1e-8);

/// Adds velocity/acceleration samples computed from gaze position when the
/// recording has none. Returns true when channels were derived.
bool derive_kinematics(ingest::RawRecording& rec);

struct LabelTrack {
  double interval_seconds = 10.0;
  std::vector<int> ratings;  // 1..9, indexed by interval
  int threshold = 5;

  int binary(std::size_t interval) const { return ratings.at(interval) >= threshold ? 1 : 0; }
};

/// CSV with columns `interval,rating` (interval indices 0..n-1).
LabelTrack parse_labels(std::istream& in, double interval_seconds, int threshold,
                        const std::string& source_name = "<stream>");
LabelTrack parse_labels(const std::filesystem::path& path, double interval_seconds,
                        int threshold);

/// floor((start + window/2) / interval): the interval holding the midpoint.
std::size_t label_index(double window_start, double window_seconds, double interval_seconds);

struct XmdWindow {
  std::string participant_id;
  std::size_t window_index = 0;
  int label = 0;
  double start_time = 0.0;  // seconds since recording start
  std::size_t steps = 0;
  std::size_t width = 0;    // 3F
  std::vector<float> z;     // row-major [steps x width]

  float at(std::size_t t, std::size_t c) const { return z[t * width + c]; }
};

/// [values | masks | log-deltas] per row; each block is [steps x features].
std::vector<float> encode_xmd(std::span<const double> values, std::span<const std::uint8_t> masks,
                              std::span<const double> log_deltas, std::size_t steps,
                              std::size_t features);

struct WindowingResult {
  std::vector<XmdWindow> windows;
  std::size_t slots = 0;    // floor(steps / T)
  std::size_t dropped = 0;  // windows whose midpoint has no label
};

/// Non-overlapping windows aligned to the recording start.
WindowingResult window_and_label(const GridSeries& grid, const LabelTrack& labels,
                                 double window_seconds);

struct ParticipantProvenance {
  std::string participant_id;
  std::size_t grid_steps = 0;
  std::size_t window_slots = 0;
  std::size_t windows = 0;
  std::size_t dropped_windows = 0;
  bool derived_kinematics = false;
  std::vector<std::string> fallback_features;
  ingest::BaselineStats baseline;

  nlohmann::ordered_json to_json() const;
};

struct ParticipantResult {
  GridSeries grid;  // imputed and normalized
  std::vector<XmdWindow> windows;
  ParticipantProvenance provenance;
};

/// Full per-participant pipeline: coalesce, derive kinematics, baseline
/// statistics, grid, masks, deltas, imputation, normalization, windowing.
ParticipantResult process_participant(ingest::RawRecording experiment,
                                       ingest::RawRecording baseline, const LabelTrack& labels,
                                       const PipelineParams& params);

/// Invariant audit of a grid or window set; each violation is one message.
struct InvariantReport {
  std::size_t cells_checked = 0;
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// `leading_values` (one per feature, optional) is what an unobserved first
/// cell must hold: the baseline mean, or 0 once normalized.
void check_grid_invariants(const GridSeries& grid, std::span<const double> leading_values,
                           InvariantReport& report);
void check_window_invariants(const XmdWindow& window, double sample_rate,
                             InvariantReport& report);

// Window files: JSON manifest plus a little-endian float32 blob, row-major
// [N, T, 3F], windows in manifest order.
struct WindowSet {
  std::vector<XmdWindow> windows;
  nlohmann::json manifest;
};

inline constexpr const char* kManifestFormat = "mambagaze.xmd-windows";
inline constexpr int kManifestVersion = 1;

/// Writes `manifest.json` and `windows.f32` into `out_dir`; `extra` fields
/// (pipeline parameters, schema profile, provenance) are merged into the manifest.
std::filesystem::path save_windows(const std::vector<XmdWindow>& windows,
                                   const std::filesystem::path& out_dir,
                                   const nlohmann::ordered_json& extra);
WindowSet load_windows(const std::filesystem::path& manifest_path);

}  // namespace mambagaze::xmd
