// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/xmd.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "mambagaze/error.hpp"
#include "json_option.hpp"

namespace mambagaze::xmd {

using ingest::BaselineStats;
using ingest::Feature;
using ingest::RawRecording;
using ingest::index_of;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Source timestamps within this fraction of a grid step of a grid point
// count as landing on it.
constexpr double kGridTolerance = 1e-6;
}  // namespace

const char* mask_mode_name(MaskMode mode) noexcept {
  return mode == MaskMode::change ? "change" : "arrival";
}

MaskMode parse_mask_mode(const std::string& name) {
  if (name == "change") return MaskMode::change;
  if (name == "arrival") return MaskMode::arrival;
  fail(ErrorCode::config, "unknown mask mode '" + name + "' (expected change or arrival)");
}

std::size_t PipelineParams::window_steps() const {
  const double steps = std::round(window_seconds * sample_rate);
  require(steps >= 1, ErrorCode::config, "window shorter than one grid step");
  return static_cast<std::size_t>(steps);
}

nlohmann::ordered_json PipelineParams::to_json() const {
  return {{"sample_rate", sample_rate},
          {"window_seconds", window_seconds},
          {"window_steps", window_steps()},
          {"label_interval", label_interval},
          {"binarize_threshold", binarize_threshold},
          {"norm_eps", norm_eps},
          {"mask_mode", mask_mode_name(mask_mode)}};
}

PipelineParams PipelineParams::from_json(const nlohmann::json& j) {
  PipelineParams p;
  p.sample_rate = detail::option(j, "sample_rate", p.sample_rate);
  p.window_seconds = detail::option(j, "window_seconds", p.window_seconds);
  p.label_interval = detail::option(j, "label_interval", p.label_interval);
  p.binarize_threshold = detail::option(j, "binarize_threshold", p.binarize_threshold);
  p.norm_eps = detail::option(j, "norm_eps", p.norm_eps);
  p.mask_mode = parse_mask_mode(detail::option(j, "mask_mode", std::string("change")));
  require(p.sample_rate > 0 && p.window_seconds > 0 && p.label_interval > 0, ErrorCode::config,
          "sample_rate, window_seconds and label_interval must be positive");
  return p;
}

std::size_t grid_index(double seconds_since_start, double rate) {
  const double k = std::ceil(seconds_since_start * rate - kGridTolerance);
  return k <= 0 ? 0 : static_cast<std::size_t>(k);
}

GridSeries resample_to_grid(const RawRecording& rec, double rate) {
  require(rate > 0, ErrorCode::config, "sample rate must be positive");
  GridSeries grid;
  grid.participant_id = rec.participant_id;
  grid.sample_rate = rate;
  if (rec.samples.empty()) return grid;

  double first = rec.samples.front().timestamp, last = first;
  for (const auto& s : rec.samples) {
    first = std::min(first, s.timestamp);
    last = std::max(last, s.timestamp);
  }
  grid.start_time = first;
  grid.steps = grid_index(last - first, rate) + 1;
  grid.values.assign(grid.steps * grid.features, kNaN);

  std::vector<const ingest::Sample*> ordered;
  ordered.reserve(rec.samples.size());
  for (const auto& s : rec.samples) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->timestamp < b->timestamp; });
  for (const auto* s : ordered) {
    grid.value(grid_index(s->timestamp - first, rate), s->channel) = s->value;
  }
  for (std::size_t f = 0; f < grid.features; ++f) {
    for (std::size_t t = 1; t < grid.steps; ++t) {
      if (std::isnan(grid.value(t, f))) grid.value(t, f) = grid.value(t - 1, f);
    }
  }
  return grid;
}

std::vector<std::uint8_t> compute_masks(const RawRecording& rec, const GridSeries& grid,
                                        MaskMode mode) {
  std::vector<std::uint8_t> masks(grid.steps * grid.features, 0);
  std::vector<const ingest::Sample*> ordered;
  for (const auto& s : rec.samples) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->timestamp < b->timestamp; });
  std::array<std::optional<double>, kFeatureCount> previous;
  for (const auto* s : ordered) {
    if (s->timestamp < grid.start_time) continue;
    const std::size_t k = grid_index(s->timestamp - grid.start_time, grid.sample_rate);
    if (k >= grid.steps) continue;
    auto& prev = previous[s->channel];
    const bool is_new = mode == MaskMode::arrival || !prev || *prev != s->value;
    if (is_new) masks[k * grid.features + s->channel] = 1;
    prev = s->value;
  }
  return masks;
}

DeltaTracks compute_deltas(std::span<const std::uint8_t> masks, std::size_t steps,
                           std::size_t features, double rate) {
  require(masks.size() == steps * features, ErrorCode::contract,
          "mask buffer does not match grid shape");
  const double dt = 1.0 / rate;
  DeltaTracks out;
  out.deltas.assign(masks.size(), 0.0);
  out.log_deltas.assign(masks.size(), 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t f = 0; f < features; ++f) {
      const std::size_t i = t * features + f;
      if (masks[i]) {
        out.deltas[i] = 0.0;
      } else {
        out.deltas[i] = (t == 0 ? 0.0 : out.deltas[i - features]) + dt;
      }
      out.log_deltas[i] = std::log1p(out.deltas[i]);
    }
  }
  return out;
}

GridSeries impute_values(GridSeries grid, const BaselineStats& base) {
  require(grid.masks.size() == grid.steps * grid.features, ErrorCode::contract,
          "impute_values needs masks for every cell");
  for (std::size_t f = 0; f < grid.features; ++f) {
    for (std::size_t t = 0; t < grid.steps; ++t) {
      double& v = grid.value(t, f);
      if (grid.mask(t, f)) {
        require(!std::isnan(v), ErrorCode::contract,
                "observed cell without a value at step " + std::to_string(t));
        continue;
      }
      v = t > 0 ? grid.value(t - 1, f) : base.mean(f);
    }
  }
  return grid;
}

GridSeries normalize(GridSeries grid, const BaselineStats& base, double eps) {
  for (std::size_t t = 0; t < grid.steps; ++t) {
    for (std::size_t f = 0; f < grid.features; ++f) {
      double& v = grid.value(t, f);
      v = (v - base.mean(f)) / (base.stddev(f) + eps);
    }
  }
  return grid;
}

bool derive_kinematics(RawRecording& rec) {
  const auto vel = index_of(Feature::gaze_velocity);
  const auto acc = index_of(Feature::gaze_acceleration);
  if (rec.count(vel) > 0 || rec.count(acc) > 0) return false;
  const auto gx = index_of(Feature::gaze_x);
  const auto gy = index_of(Feature::gaze_y);

  std::map<double, std::pair<std::optional<double>, std::optional<double>>> points;
  for (const auto& s : rec.samples) {
    if (s.channel == gx) points[s.timestamp].first = s.value;
    if (s.channel == gy) points[s.timestamp].second = s.value;
  }
  std::vector<ingest::Sample> derived;
  std::optional<std::pair<double, std::pair<double, double>>> prev_pos;
  std::optional<std::pair<double, double>> prev_vel;  // (time, velocity)
  for (const auto& [t, xy] : points) {
    if (!xy.first || !xy.second) continue;
    if (prev_pos) {
      const double dt = t - prev_pos->first;
      const double dx = *xy.first - prev_pos->second.first;
      const double dy = *xy.second - prev_pos->second.second;
      const double v = std::hypot(dx, dy) / dt;
      derived.push_back({t, vel, v});
      if (prev_vel) derived.push_back({t, acc, (v - prev_vel->second) / (t - prev_vel->first)});
      prev_vel = {t, v};
    }
    prev_pos = {t, {*xy.first, *xy.second}};
  }
  if (derived.empty()) return false;
  rec.samples.insert(rec.samples.end(), derived.begin(), derived.end());
  std::stable_sort(rec.samples.begin(), rec.samples.end(),
                   [](const auto& a, const auto& b) {
                     return a.timestamp < b.timestamp ||
                            (a.timestamp == b.timestamp && a.channel < b.channel);
                   });
  return true;
}

LabelTrack parse_labels(std::istream& in, double interval_seconds, int threshold,
                        const std::string& source_name) {
  LabelTrack track;
  track.interval_seconds = interval_seconds;
  track.threshold = threshold;
  std::string line;
  if (!std::getline(in, line)) return track;
  std::map<std::size_t, int> by_interval;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream row(line);
    std::string a, b;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    long interval = 0, rating = 0;
    try {
      interval = std::stol(a);
      rating = std::stol(b);
    } catch (const std::exception&) {
      fail(ErrorCode::schema, source_name + ":" + std::to_string(line_no) +
                                  ": expected integer interval,rating");
    }
    require(interval >= 0, ErrorCode::schema,
            source_name + ":" + std::to_string(line_no) + ": negative interval index");
    require(rating >= 1 && rating <= 9, ErrorCode::schema,
            source_name + ":" + std::to_string(line_no) + ": rating " + std::to_string(rating) +
                " outside 1..9");
    by_interval[static_cast<std::size_t>(interval)] = static_cast<int>(rating);
  }
  std::size_t expected = 0;
  for (const auto& [interval, rating] : by_interval) {
    require(interval == expected, ErrorCode::schema,
            source_name + ": label intervals must be contiguous from 0 (missing " +
                std::to_string(expected) + ")");
    track.ratings.push_back(rating);
    ++expected;
  }
  return track;
}

LabelTrack parse_labels(const std::filesystem::path& path, double interval_seconds,
                        int threshold) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  return parse_labels(in, interval_seconds, threshold, path.string());
}

std::size_t label_index(double window_start, double window_seconds, double interval_seconds) {
  const double pos = (window_start + window_seconds / 2.0) / interval_seconds;
  return static_cast<std::size_t>(std::floor(pos + 1e-9));
}

std::vector<float> encode_xmd(std::span<const double> values, std::span<const std::uint8_t> masks,
                              std::span<const double> log_deltas, std::size_t steps,
                              std::size_t features) {
  const std::size_t n = steps * features;
  require(values.size() == n && masks.size() == n && log_deltas.size() == n,
          ErrorCode::contract,
          "encode_xmd blocks must all be [" + std::to_string(steps) + " x " +
              std::to_string(features) + "]");
  const std::size_t width = 3 * features;
  std::vector<float> z(steps * width);
  for (std::size_t t = 0; t < steps; ++t) {
    float* row = z.data() + t * width;
    for (std::size_t f = 0; f < features; ++f) {
      row[f] = static_cast<float>(values[t * features + f]);
      row[features + f] = masks[t * features + f] ? 1.0f : 0.0f;
      row[2 * features + f] = static_cast<float>(log_deltas[t * features + f]);
    }
  }
  return z;
}

WindowingResult window_and_label(const GridSeries& grid, const LabelTrack& labels,
                                 double window_seconds) {
  const double steps_d = std::round(window_seconds * grid.sample_rate);
  require(steps_d >= 1, ErrorCode::config, "window shorter than one grid step");
  const auto T = static_cast<std::size_t>(steps_d);
  const std::size_t F = grid.features;
  require(grid.deltas.size() == grid.steps * F && grid.masks.size() == grid.steps * F,
          ErrorCode::contract, "window_and_label needs masks and deltas");

  WindowingResult result;
  result.slots = grid.steps / T;
  for (std::size_t k = 0; k < result.slots; ++k) {
    const double start = static_cast<double>(k * T) / grid.sample_rate;
    const std::size_t interval = label_index(start, window_seconds, labels.interval_seconds);
    if (interval >= labels.ratings.size()) {
      ++result.dropped;
      continue;
    }
    const std::size_t off = k * T * F;
    std::vector<double> log_deltas(T * F);
    for (std::size_t i = 0; i < T * F; ++i) log_deltas[i] = std::log1p(grid.deltas[off + i]);
    XmdWindow w;
    w.participant_id = grid.participant_id;
    w.window_index = k;
    w.label = labels.binary(interval);
    w.start_time = start;
    w.steps = T;
    w.width = 3 * F;
    w.z = encode_xmd(std::span(grid.values).subspan(off, T * F),
                     std::span(grid.masks).subspan(off, T * F), log_deltas, T, F);
    result.windows.push_back(std::move(w));
  }
  return result;
}

nlohmann::ordered_json ParticipantProvenance::to_json() const {
  nlohmann::ordered_json base = nlohmann::ordered_json::object();
  const auto& names = ingest::feature_names();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto& fb = baseline.features[f];
    base[std::string(names[f])] = {{"mean", fb.mean},     {"stddev", fb.stddev},
                                   {"observations", fb.observations},
                                   {"kept", fb.kept},     {"fallback", fb.fallback},
                                   {"note", fb.note}};
  }
  return {{"participant", participant_id},
          {"grid_steps", grid_steps},
          {"window_slots", window_slots},
          {"windows", windows},
          {"dropped_windows", dropped_windows},
          {"derived_kinematics", derived_kinematics},
          {"fallback_features", fallback_features},
          {"baseline", base}};
}

ParticipantResult process_participant(RawRecording experiment, RawRecording baseline,
                                       const LabelTrack& labels, const PipelineParams& params) {
  require(!experiment.empty(), ErrorCode::empty_recording,
          "participant " + experiment.participant_id + ": experiment session has no samples");
  experiment = ingest::coalesce_timestamps(std::move(experiment));
  baseline = ingest::coalesce_timestamps(std::move(baseline));

  ParticipantResult out;
  out.provenance.participant_id = experiment.participant_id;
  out.provenance.derived_kinematics = derive_kinematics(experiment);
  derive_kinematics(baseline);

  const BaselineStats stats = ingest::baseline_stats(baseline);
  out.provenance.baseline = stats;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (stats.features[f].fallback)
      out.provenance.fallback_features.emplace_back(ingest::feature_names()[f]);
  }

  GridSeries grid = resample_to_grid(experiment, params.sample_rate);
  grid.masks = compute_masks(experiment, grid, params.mask_mode);
  grid.deltas = compute_deltas(grid.masks, grid.steps, grid.features, params.sample_rate).deltas;
  grid = impute_values(std::move(grid), stats);
  grid = normalize(std::move(grid), stats, params.norm_eps);

  auto windows = window_and_label(grid, labels, params.window_seconds);
  out.provenance.grid_steps = grid.steps;
  out.provenance.window_slots = windows.slots;
  out.provenance.windows = windows.windows.size();
  out.provenance.dropped_windows = windows.dropped;
  out.windows = std::move(windows.windows);
  out.grid = std::move(grid);
  return out;
}

namespace {

void violation(InvariantReport& report, const std::string& where, const std::string& what) {
  if (report.violations.size() < 100) report.violations.push_back(where + ": " + what);
  else if (report.violations.size() == 100) report.violations.push_back("... (truncated)");
}

}  // namespace

void check_grid_invariants(const GridSeries& grid, std::span<const double> leading_values,
                           InvariantReport& report) {
  const std::size_t F = grid.features;
  const double dt = 1.0 / grid.sample_rate;
  const std::string id = "grid " + grid.participant_id;
  if (grid.values.size() != grid.steps * F || grid.masks.size() != grid.steps * F ||
      grid.deltas.size() != grid.steps * F) {
    violation(report, id, "buffer sizes do not match steps x features");
    return;
  }
  for (std::size_t t = 0; t < grid.steps; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      ++report.cells_checked;
      const auto where = [&] {
        return id + " t=" + std::to_string(t) + " f=" + std::to_string(f);
      };
      const std::uint8_t m = grid.mask(t, f);
      const double d = grid.delta(t, f);
      const double v = grid.value(t, f);
      if (m > 1) violation(report, where(), "mask not binary");
      if (!std::isfinite(v)) violation(report, where(), "value not finite after imputation");
      if (m == 1 && d != 0.0) violation(report, where(), "observed cell with nonzero delta");
      if (m == 0 && !(d > 0.0)) violation(report, where(), "unobserved cell with zero delta");
      if (m == 0) {
        const double prev_delta = t > 0 ? grid.delta(t - 1, f) : 0.0;
        if (std::abs(d - prev_delta - dt) > 1e-9)
          violation(report, where(), "delta step differs from 1/rate");
        if (t > 0 && v != grid.value(t - 1, f))
          violation(report, where(), "imputed value differs from previous cell");
        if (t == 0 && !leading_values.empty() && v != leading_values[f])
          violation(report, where(), "leading imputed value differs from baseline");
      }
    }
  }
}

void check_window_invariants(const XmdWindow& w, double sample_rate, InvariantReport& report) {
  const std::string id = "window " + w.participant_id + "#" + std::to_string(w.window_index);
  if (w.width % 3 != 0 || w.z.size() != w.steps * w.width) {
    violation(report, id, "tensor shape inconsistent");
    return;
  }
  if (w.label != 0 && w.label != 1) violation(report, id, "label not binary");
  const std::size_t F = w.width / 3;
  const double dt = 1.0 / sample_rate;
  for (std::size_t t = 0; t < w.steps; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      ++report.cells_checked;
      const auto where = [&] { return id + " t=" + std::to_string(t) + " f=" + std::to_string(f); };
      const float v = w.at(t, f);
      const float m = w.at(t, F + f);
      const float ld = w.at(t, 2 * F + f);
      if (!std::isfinite(v)) violation(report, where(), "value not finite");
      if (m != 0.0f && m != 1.0f) violation(report, where(), "mask not exactly 0 or 1");
      if (!(ld >= 0.0f)) violation(report, where(), "log-delta negative");
      if ((m == 1.0f) != (ld == 0.0f)) violation(report, where(), "mask/delta disagree");
      if (m == 0.0f && t > 0) {
        const double d = std::expm1(static_cast<double>(ld));
        const double prev = std::expm1(static_cast<double>(w.at(t - 1, 2 * F + f)));
        if (std::abs(d - prev - dt) > 1e-5 * (1.0 + d))
          violation(report, where(), "delta step differs from 1/rate");
        if (v != w.at(t - 1, f)) violation(report, where(), "imputed value differs from previous");
      }
    }
  }
}

namespace {

void write_f32_le(std::ostream& out, std::span<const float> values) {
  std::vector<char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void read_f32_le(std::istream& in, std::span<float> values) {
  std::vector<unsigned char> bytes(values.size() * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
}

}  // namespace

std::filesystem::path save_windows(const std::vector<XmdWindow>& windows,
                                   const std::filesystem::path& out_dir,
                                   const nlohmann::ordered_json& extra) {
  std::filesystem::create_directories(out_dir);
  const std::size_t steps = windows.empty() ? 0 : windows.front().steps;
  const std::size_t width = windows.empty() ? 0 : windows.front().width;
  std::set<std::string> participants;
  std::size_t n_pos = 0;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& w : windows) {
    require(w.steps == steps && w.width == width && w.z.size() == steps * width,
            ErrorCode::contract, "windows in one set must share a shape");
    participants.insert(w.participant_id);
    n_pos += w.label == 1 ? 1 : 0;
    entries.push_back({{"participant", w.participant_id},
                       {"index", w.window_index},
                       {"label", w.label},
                       {"start_time", w.start_time}});
  }

  nlohmann::ordered_json manifest;
  manifest["format"] = kManifestFormat;
  manifest["version"] = kManifestVersion;
  manifest["binary"] = "windows.f32";
  manifest["dtype"] = "float32-le";
  manifest["layout"] = "row-major [count, steps, width]";
  manifest["count"] = windows.size();
  manifest["steps"] = steps;
  manifest["width"] = width;
  manifest["features"] = width / 3;
  manifest["participants"] = participants;
  manifest["label_distribution"] = {{"0", windows.size() - n_pos}, {"1", n_pos}};
  for (const auto& [key, value] : extra.items()) manifest[key] = value;
  manifest["windows"] = entries;

  const auto bin_tmp = out_dir / "windows.f32.tmp";
  const auto man_tmp = out_dir / "manifest.json.tmp";
  {
    std::ofstream bin(bin_tmp, std::ios::binary | std::ios::trunc);
    if (!bin) fail(ErrorCode::io, "cannot write " + bin_tmp.string());
    for (const auto& w : windows) write_f32_le(bin, w.z);
    if (!bin) fail(ErrorCode::io, "write failed for " + bin_tmp.string());
  }
  {
    std::ofstream man(man_tmp, std::ios::trunc);
    if (!man) fail(ErrorCode::io, "cannot write " + man_tmp.string());
    man << manifest.dump(2) << "\n";
  }
  std::filesystem::rename(bin_tmp, out_dir / "windows.f32");
  std::filesystem::rename(man_tmp, out_dir / "manifest.json");
  return out_dir / "manifest.json";
}

WindowSet load_windows(const std::filesystem::path& manifest_path) {
  std::ifstream man(manifest_path);
  if (!man) fail(ErrorCode::io, "cannot open manifest " + manifest_path.string());
  WindowSet set;
  try {
    man >> set.manifest;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::corruption, manifest_path.string() + ": invalid JSON: " + e.what());
  }
  const auto& m = set.manifest;
  require(m.value("format", std::string()) == kManifestFormat, ErrorCode::corruption,
          manifest_path.string() + ": not a window manifest");
  require(m.value("version", 0) == kManifestVersion, ErrorCode::corruption,
          manifest_path.string() + ": unsupported manifest version");
  const auto count = m.at("count").get<std::size_t>();
  const auto steps = m.at("steps").get<std::size_t>();
  const auto width = m.at("width").get<std::size_t>();
  const auto& entries = m.at("windows");
  require(entries.size() == count, ErrorCode::corruption,
          manifest_path.string() + ": window list has " + std::to_string(entries.size()) +
              " entries, count says " + std::to_string(count));

  const auto bin_path = manifest_path.parent_path() / m.at("binary").get<std::string>();
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(bin_path, ec);
  if (ec) fail(ErrorCode::io, "cannot stat " + bin_path.string());
  const std::uintmax_t expected = static_cast<std::uintmax_t>(count) * steps * width * 4;
  require(bytes == expected, ErrorCode::corruption,
          bin_path.string() + ": " + std::to_string(bytes) + " bytes, manifest implies " +
              std::to_string(expected));

  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) fail(ErrorCode::io, "cannot open " + bin_path.string());
  set.windows.reserve(count);
  for (const auto& e : entries) {
    XmdWindow w;
    w.participant_id = e.at("participant").get<std::string>();
    w.window_index = e.at("index").get<std::size_t>();
    w.label = e.at("label").get<int>();
    require(w.label == 0 || w.label == 1, ErrorCode::corruption,
            manifest_path.string() + ": non-binary label");
    w.start_time = e.at("start_time").get<double>();
    w.steps = steps;
    w.width = width;
    w.z.resize(steps * width);
    read_f32_le(bin, w.z);
    set.windows.push_back(std::move(w));
  }
  if (!bin) fail(ErrorCode::corruption, bin_path.string() + ": short read");
  return set;
}

}  // namespace mambagaze::xmd
