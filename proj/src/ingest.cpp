// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "mambagaze/error.hpp"

namespace mambagaze::ingest {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "pupil_left",   "pupil_right",  "gaze_x",     "gaze_y",     "gaze_velocity",
    "gaze_acceleration", "fixation_flag", "saccade_flag", "blink_flag", "distance"};

// Pupil and gaze position are required for the dataset profiles; kinematics
// can be derived downstream and the indicators/distance may be absent.
constexpr std::array<bool, kFeatureCount> kDatasetRequired = {
    true, true, true, true, false, false, false, false, false, false};

std::vector<ProfileMapping> build_profiles() {
  std::vector<ProfileMapping> out;
  {
    ProfileMapping m{SchemaProfile::clare, "time_ms", 1e-3, {}, kDatasetRequired};
    m.columns = {"pupil_diameter_left", "pupil_diameter_right", "gaze_point_x",
                 "gaze_point_y",        "gaze_velocity",        "gaze_acceleration",
                 "fixation",            "saccade",              "blink",
                 "eye_distance"};
    out.push_back(m);
  }
  {
    ProfileMapping m{SchemaProfile::cldrive, "TimeStamp", 1.0, {}, kDatasetRequired};
    m.columns = {"LeftPupilDiameter", "RightPupilDiameter", "GazeX",     "GazeY",
                 "GazeVelocity",      "GazeAcceleration",   "Fixation",  "Saccade",
                 "Blink",             "HeadDistance"};
    out.push_back(m);
  }
  {
    ProfileMapping m{SchemaProfile::generic, "timestamp", 1.0, {}, {}};
    for (std::size_t f = 0; f < kFeatureCount; ++f) m.columns[f] = std::string(kNames[f]);
    out.push_back(m);
  }
  return out;
}

const std::vector<ProfileMapping>& profiles() {
  static const std::vector<ProfileMapping> table = build_profiles();
  return table;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// RFC 4180-style split: quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double v = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() noexcept { return kNames; }

std::optional<std::size_t> feature_index(std::string_view name) noexcept {
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    if (kNames[f] == name) return f;
  return std::nullopt;
}

bool is_binary_feature(std::size_t feature) noexcept {
  return feature == index_of(Feature::fixation_flag) ||
         feature == index_of(Feature::saccade_flag) || feature == index_of(Feature::blink_flag);
}

std::size_t RawRecording::count(std::size_t channel) const noexcept {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [channel](const Sample& s) { return s.channel == channel; }));
}

const char* profile_name(SchemaProfile profile) noexcept {
  switch (profile) {
    case SchemaProfile::clare: return "clare";
    case SchemaProfile::cldrive: return "cldrive";
    case SchemaProfile::generic: return "generic";
  }
  return "?";
}

SchemaProfile parse_profile(std::string_view name) {
  if (name == "clare") return SchemaProfile::clare;
  if (name == "cldrive" || name == "cl-drive") return SchemaProfile::cldrive;
  if (name == "generic") return SchemaProfile::generic;
  fail(ErrorCode::config, "unknown schema profile '" + std::string(name) +
                              "' (expected clare, cldrive or generic)");
}

const ProfileMapping& profile_mapping(SchemaProfile profile) {
  for (const auto& m : profiles())
    if (m.profile == profile) return m;
  fail(ErrorCode::internal, "no mapping for schema profile");
}

std::string profiles_sidecar_json() {
  nlohmann::ordered_json doc;
  doc["format"] = "mambagaze.schema-profiles";
  doc["version"] = 1;
  doc["canonical_features"] = std::vector<std::string>(kNames.begin(), kNames.end());
  for (const auto& m : profiles()) {
    nlohmann::ordered_json p;
    p["time_column"] = m.time_column;
    p["time_scale_to_seconds"] = m.time_scale;
    nlohmann::ordered_json cols;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      cols[std::string(kNames[f])] = {{"column", m.columns[f]}, {"required", m.required[f]}};
    }
    p["features"] = cols;
    doc["profiles"][profile_name(m.profile)] = p;
  }
  return doc.dump(2) + "\n";
}

RawRecording parse_recording(std::istream& in, SchemaProfile profile, std::string participant_id,
                             SessionKind session, const std::string& source_name) {
  const ProfileMapping& map = profile_mapping(profile);
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorCode::empty_recording, source_name + ": file is empty");
  }
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  auto find_column = [&header](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };

  const auto time_col = find_column(map.time_column);
  if (!time_col) {
    fail(ErrorCode::schema, source_name + ": missing required column '" + map.time_column +
                                "' (" + profile_name(profile) + " profile)");
  }
  std::array<std::optional<std::size_t>, kFeatureCount> feature_cols;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    feature_cols[f] = find_column(map.columns[f]);
    if (!feature_cols[f] && map.required[f]) {
      fail(ErrorCode::schema, source_name + ": missing required column '" + map.columns[f] +
                                  "' (" + profile_name(profile) + " profile)");
    }
  }

  RawRecording rec;
  rec.participant_id = std::move(participant_id);
  rec.session = session;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++rows;
    const auto cells = split_csv_line(line);
    const auto ts = *time_col < cells.size() ? parse_number(cells[*time_col]) : std::nullopt;
    if (!ts) continue;  // a row without a usable timestamp carries no observation
    const double t = *ts * map.time_scale;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (!feature_cols[f] || *feature_cols[f] >= cells.size()) continue;
      if (auto v = parse_number(cells[*feature_cols[f]])) rec.samples.push_back({t, f, *v});
    }
  }
  if (rows == 0) fail(ErrorCode::empty_recording, source_name + ": no data rows");
  return rec;
}

RawRecording parse_recording(const std::filesystem::path& path, SchemaProfile profile,
                             std::string participant_id, SessionKind session) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  return parse_recording(in, profile, std::move(participant_id), session, path.string());
}

RawRecording coalesce_timestamps(RawRecording rec) {
  std::stable_sort(rec.samples.begin(), rec.samples.end(),
                   [](const Sample& a, const Sample& b) { return a.timestamp < b.timestamp; });
  std::vector<Sample> out;
  out.reserve(rec.samples.size());
  std::size_t i = 0;
  while (i < rec.samples.size()) {
    std::size_t j = i;
    std::array<std::optional<double>, kFeatureCount> last;
    while (j < rec.samples.size() && rec.samples[j].timestamp == rec.samples[i].timestamp) {
      last[rec.samples[j].channel] = rec.samples[j].value;
      ++j;
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      if (last[f]) out.push_back({rec.samples[i].timestamp, f, *last[f]});
    i = j;
  }
  rec.samples = std::move(out);
  return rec;
}

void write_generic_csv(const RawRecording& rec, std::ostream& out) {
  const auto& map = profile_mapping(SchemaProfile::generic);
  out << map.time_column;
  for (const auto& c : map.columns) out << ',' << c;
  out << '\n';
  const auto coalesced = coalesce_timestamps(rec);
  std::size_t i = 0;
  const auto& s = coalesced.samples;
  out << std::setprecision(17);
  while (i < s.size()) {
    std::array<std::optional<double>, kFeatureCount> row;
    const double t = s[i].timestamp;
    while (i < s.size() && s[i].timestamp == t) {
      row[s[i].channel] = s[i].value;
      ++i;
    }
    out << t;
    for (const auto& v : row) {
      out << ',';
      if (v) out << *v;
    }
    out << '\n';
  }
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), ErrorCode::contract, "percentile of an empty sample");
  const double rank = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median_sorted(const std::vector<double>& sorted) { return percentile_sorted(sorted, 0.5); }

namespace {

double population_stddev(const std::vector<double>& values) {
  double mu = 0;
  for (double v : values) mu += v;
  mu /= static_cast<double>(values.size());
  double var = 0;
  for (double v : values) var += (v - mu) * (v - mu);
  return std::sqrt(var / static_cast<double>(values.size()));
}

}  // namespace

BaselineStats baseline_stats(const RawRecording& rec) {
  require(rec.session == SessionKind::baseline, ErrorCode::contract,
          "baseline_stats needs a baseline session (participant " + rec.participant_id + ")");
  std::array<std::vector<double>, kFeatureCount> per_feature;
  for (const auto& s : rec.samples) per_feature[s.channel].push_back(s.value);

  BaselineStats stats;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    auto& out = stats.features[f];
    auto values = per_feature[f];
    out.observations = values.size();
    if (is_binary_feature(f)) {
      out.mean = 0.0;
      out.stddev = 1.0;
      out.note = "indicator channel: fixed (0, 1)";
      continue;
    }
    if (values.empty()) {
      out.mean = 0.0;
      out.stddev = 1.0;
      out.fallback = true;
      out.note = "no baseline observations: fallback (0, 1)";
      continue;
    }
    std::sort(values.begin(), values.end());
    if (values.size() < kMinBaselineObservations) {
      out.mean = median_sorted(values);
      out.stddev = population_stddev(values);
      out.kept = values.size();
      out.fallback = true;
      out.note = "fewer than " + std::to_string(kMinBaselineObservations) +
                 " observations: unfiltered median/stddev";
      continue;
    }
    const double q10 = percentile_sorted(values, 0.10);
    const double q90 = percentile_sorted(values, 0.90);
    std::vector<double> kept;
    for (double v : values)
      if (v >= q10 && v <= q90) kept.push_back(v);
    out.mean = median_sorted(kept);
    out.stddev = population_stddev(kept);
    out.kept = kept.size();
  }
  return stats;
}

}  // namespace mambagaze::ingest
