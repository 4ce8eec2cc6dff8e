// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The MambaGaze Authors

#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "mambagaze/config.hpp"

/// End-to-end operations behind the command-line tool and the C API. Each
/// writes its outputs into a staging directory and moves them into place
/// only on success.
namespace mambagaze::pipeline {

namespace fs = std::filesystem;

/// Output directory staging: files go to `<out>/.staging-*` and are moved
/// into `<out>` by commit(); otherwise everything is removed.
class StagedDir {
 public:
  explicit StagedDir(fs::path out_dir);
  ~StagedDir();
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  const fs::path& path() const noexcept { return staging_; }
  const fs::path& target() const noexcept { return out_; }
  void commit();

 private:
  fs::path out_;
  fs::path staging_;
  bool created_out_ = false;
  bool committed_ = false;
};

/// Writes JSON with a trailing newline (two-space indent).
void write_json(const fs::path& path, const nlohmann::ordered_json& j);

/// `<raw>/<participant>/{experiment,baseline,labels}.csv` to a window set.
nlohmann::ordered_json run_preprocess(const fs::path& raw_dir, const fs::path& out_dir,
                                      const config::RunConfig& cfg);

nlohmann::ordered_json run_synth(const fs::path& out_dir, const config::RunConfig& cfg);

/// `full` writes model.ckpt and model.json; `loso`/`kfold` write per-fold
/// artifacts under folds/ and report.json.
nlohmann::ordered_json run_train(const fs::path& manifest, const fs::path& out_dir,
                                 const config::RunConfig& cfg);

/// Cross-validates per the protocol, or scores a given checkpoint.
nlohmann::ordered_json run_evaluate(const fs::path& manifest, const fs::path& out_dir,
                                    const config::RunConfig& cfg,
                                    const std::optional<fs::path>& checkpoint);

/// Benchmarks a checkpoint (or a freshly initialized model). `out_dir`,
/// when given, receives bench.json.
nlohmann::ordered_json run_bench(const std::optional<fs::path>& checkpoint,
                                 const std::optional<fs::path>& out_dir,
                                 const config::RunConfig& cfg,
                                 const std::optional<fs::path>& power_file, double power_scale);

/// Accepts a manifest file or a directory holding manifest.json.
fs::path resolve_manifest(const fs::path& path);

}  // namespace mambagaze::pipeline
