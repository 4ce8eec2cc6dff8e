// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#include "mambagaze/config.hpp"

#include <array>
#include <fstream>

#include "mambagaze/error.hpp"
#include "json_option.hpp"

namespace mambagaze::config {

namespace {

template <std::size_t N>
void check_keys(const nlohmann::json& j, const std::array<const char*, N>& known,
                const std::string& section) {
  require(j.is_object(), ErrorCode::config, "config section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    require(ok, ErrorCode::config, "unknown option '" + section + "." + key + "'");
  }
}

}  // namespace

void RunConfig::set_seed(std::uint64_t value) {
  seed = value;
  model.seed = value;
  train.seed = value;
  synth.seed = value;
  bench.seed = value;
}

void RunConfig::validate() const {
  require(preprocess.sample_rate > 0 && preprocess.window_seconds > 0 &&
              preprocess.label_interval > 0,
          ErrorCode::config, "preprocess rates and durations must be positive");
  require(preprocess.window_steps() >= 1, ErrorCode::config,
          "preprocess.window_seconds * sample_rate must be at least one step");
  model.validate();
  train.validate();
  synth.validate();
  bench.validate();
  require(protocol.kind == "full" || protocol.kind == "loso" || protocol.kind == "kfold",
          ErrorCode::usage,
          "unknown protocol '" + protocol.kind + "' (expected full, loso or kfold)");
  require(protocol.k >= 2, ErrorCode::config, "protocol.k must be at least 2");
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  auto pre = preprocess.to_json();
  pre["schema_profile"] = ingest::profile_name(schema_profile);
  j["preprocess"] = pre;
  j["model"] = model.to_json();
  j["train"] = train.to_json();
  j["protocol"] = {{"kind", protocol.kind}, {"k", protocol.k}};
  j["synth"] = synth.to_json();
  j["bench"] = bench.to_json();
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  static const std::array<const char*, 7> sections = {"seed",     "preprocess", "model", "train",
                                                      "protocol", "synth",      "bench"};
  check_keys(j, sections, "<root>");
  RunConfig c;
  try {
    if (j.contains("seed")) c.seed = detail::option(j, "seed", c.seed);
    if (j.contains("preprocess")) {
      static const std::array<const char*, 8> keys = {
          "sample_rate", "window_seconds", "label_interval", "binarize_threshold",
          "norm_eps",    "mask_mode",      "schema_profile", "window_steps"};
      const auto& p = j.at("preprocess");
      check_keys(p, keys, "preprocess");
      c.preprocess = xmd::PipelineParams::from_json(p);
      // window_steps is derived; an echoed value must agree with the rest.
      if (p.contains("window_steps") &&
          p.at("window_steps").get<std::size_t>() != c.preprocess.window_steps())
        fail(ErrorCode::config, "preprocess.window_steps disagrees with window_seconds * sample_rate");
      if (p.contains("schema_profile"))
        c.schema_profile = ingest::parse_profile(p.at("schema_profile").get<std::string>());
    }
    if (j.contains("model")) c.model = model::ModelConfig::from_json(j.at("model"));
    if (j.contains("train")) c.train = train::TrainConfig::from_json(j.at("train"));
    if (j.contains("protocol")) {
      static const std::array<const char*, 2> keys = {"kind", "k"};
      const auto& p = j.at("protocol");
      check_keys(p, keys, "protocol");
      c.protocol.kind = detail::option(p, "kind", c.protocol.kind);
      c.protocol.k = detail::option(p, "k", c.protocol.k);
    }
    if (j.contains("synth")) c.synth = synth::SynthSpec::from_json(j.at("synth"));
    if (j.contains("bench")) c.bench = bench::BenchConfig::from_json(j.at("bench"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("config: ") + e.what());
  }
  c.set_seed(c.seed);
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, "config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overlay) {
  if (!base.is_object()) base = nlohmann::json::object();
  require(overlay.is_object() || overlay.is_null(), ErrorCode::config,
          "config overlay must be a JSON object");
  if (overlay.is_null()) return base;
  for (const auto& [key, value] : overlay.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      base[key] = merge_config(base[key], value);
    } else {
      base[key] = value;
    }
  }
  return base;
}

}  // namespace mambagaze::config
