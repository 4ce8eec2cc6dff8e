// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mambagaze/bench.hpp"
#include "mambagaze/ingest.hpp"
#include "mambagaze/model.hpp"
#include "mambagaze/synth.hpp"
#include "mambagaze/train.hpp"
#include "mambagaze/xmd.hpp"

namespace mambagaze::config {

/// `full` trains one model on every window; `loso` and `kfold` cross-validate.
struct ProtocolConfig {
  std::string kind = "loso";
  std::size_t k = 5;
};

/// Every tunable of a run, resolved from defaults, a config file and flags.
/// Sections: preprocess, model, train, protocol, synth, bench; plus seed.
struct RunConfig {
  xmd::PipelineParams preprocess;
  ingest::SchemaProfile schema_profile = ingest::SchemaProfile::clare;
  model::ModelConfig model;
  train::TrainConfig train;
  ProtocolConfig protocol;
  synth::SynthSpec synth;
  bench::BenchConfig bench;
  std::uint64_t seed = 0;

  /// Propagates the run seed into every section.
  void set_seed(std::uint64_t value);
  void validate() const;
  nlohmann::ordered_json to_json() const;

  /// Overlays `j` on the defaults; unknown keys are config errors.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
};

/// Applies `overlay` onto `base` section by section (later wins).
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overlay);

}  // namespace mambagaze::config
